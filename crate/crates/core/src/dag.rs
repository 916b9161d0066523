//! Directed acyclic graphs over nodes `1..=d`.
//!
//! A [`Dag`] is validated on construction (ids in range, no self-loops, no
//! duplicate edges, no cycles) and is immutable afterwards. The reflexive
//! ancestral closure is computed once so that ancestor and descendant
//! queries are table lookups.

use crate::rng::plain_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use thiserror::Error;

/// Default cap on the number of enumerated paths.
pub const DEFAULT_MAX_PATHS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DagError {
    #[error("node id {id} out of range 1..={d}")]
    NodeOutOfRange { id: usize, d: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("graph has a cycle through nodes {0:?}")]
    Cycle(Vec<usize>),
    #[error("more than {max_paths} paths from {from} to {to}")]
    TooManyPaths { from: usize, to: usize, max_paths: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    d: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    order: Vec<usize>,
    // reach[h-1][i-1] == true  <=>  h ∈ An(i)
    reach: Vec<Vec<bool>>,
}

impl Dag {
    /// Builds a DAG on nodes `1..=d` from edges `(j, i)` meaning `j → i`.
    pub fn new(d: usize, edges: &[(usize, usize)]) -> Result<Self, DagError> {
        if d == 0 {
            return Err(DagError::InvalidArgument("a graph needs at least one node".into()));
        }
        let mut parents = vec![Vec::new(); d];
        let mut children = vec![Vec::new(); d];
        let mut seen = BTreeSet::new();
        for &(j, i) in edges {
            for id in [j, i] {
                if id == 0 || id > d {
                    return Err(DagError::NodeOutOfRange { id, d });
                }
            }
            if j == i {
                return Err(DagError::SelfLoop(j));
            }
            if !seen.insert((j, i)) {
                return Err(DagError::DuplicateEdge(j, i));
            }
            parents[i - 1].push(j);
            children[j - 1].push(i);
        }
        parents.iter_mut().for_each(|p| p.sort_unstable());
        children.iter_mut().for_each(|c| c.sort_unstable());
        let order = topological_sort(d, edges)?;

        let mut reach = vec![vec![false; d]; d];
        // Process in topological order: An(i) = {i} ∪ ⋃_{p ∈ pa(i)} An(p).
        for &i in &order {
            reach[i - 1][i - 1] = true;
            for &p in &parents[i - 1] {
                for row in reach.iter_mut() {
                    if row[p - 1] {
                        row[i - 1] = true;
                    }
                }
            }
        }

        Ok(Self { d, parents, children, edges: seen.into_iter().collect(), order, reach })
    }

    pub fn node_count(&self) -> usize {
        self.d
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> {
        1..=self.d
    }

    /// Edges `(j, i)` sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i - 1]
    }

    pub fn children(&self, j: usize) -> &[usize] {
        &self.children[j - 1]
    }

    pub fn has_edge(&self, j: usize, i: usize) -> bool {
        self.parents[i - 1].binary_search(&j).is_ok()
    }

    /// Topological order with ties broken by ascending node id.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// Whether `order` is a permutation of the nodes that puts every
    /// parent before its children.
    pub fn is_linear_extension(&self, order: &[usize]) -> bool {
        if order.len() != self.d {
            return false;
        }
        let mut pos = vec![usize::MAX; self.d];
        for (r, &v) in order.iter().enumerate() {
            if v == 0 || v > self.d || pos[v - 1] != usize::MAX {
                return false;
            }
            pos[v - 1] = r;
        }
        self.edges.iter().all(|&(j, i)| pos[j - 1] < pos[i - 1])
    }

    fn check(&self, id: usize) -> Result<(), DagError> {
        if id == 0 || id > self.d {
            Err(DagError::NodeOutOfRange { id, d: self.d })
        } else {
            Ok(())
        }
    }

    /// `h ∈ An(i)`, i.e. `h == i` or `h ⇝ i`. Ids must be in range.
    #[inline]
    pub fn is_reflexive_ancestor(&self, h: usize, i: usize) -> bool {
        self.reach[h - 1][i - 1]
    }

    /// `h ∈ an(i)`.
    #[inline]
    pub fn is_ancestor(&self, h: usize, i: usize) -> bool {
        h != i && self.reach[h - 1][i - 1]
    }

    /// Strict ancestors `an(i)`.
    pub fn ancestors(&self, i: usize) -> Result<BTreeSet<usize>, DagError> {
        self.check(i)?;
        Ok(self.nodes().filter(|&h| self.is_ancestor(h, i)).collect())
    }

    /// Strict descendants `de(j)`.
    pub fn descendants(&self, j: usize) -> Result<BTreeSet<usize>, DagError> {
        self.check(j)?;
        Ok(self.nodes().filter(|&i| self.is_ancestor(j, i)).collect())
    }

    /// All directed paths `h ⇝ i` as node sequences, in lexicographic order.
    ///
    /// Fails once more than `max_paths` paths have been found; path counts
    /// grow exponentially on dense graphs.
    pub fn enumerate_paths(
        &self,
        h: usize,
        i: usize,
        max_paths: usize,
    ) -> Result<Vec<Vec<usize>>, DagError> {
        self.check(h)?;
        self.check(i)?;
        if h == i {
            return Err(DagError::InvalidArgument("path endpoints must differ".into()));
        }
        let mut out = Vec::new();
        if !self.is_ancestor(h, i) {
            return Ok(out);
        }
        let mut stack = vec![h];
        self.walk(i, &mut stack, &mut out, max_paths)?;
        Ok(out)
    }

    fn walk(
        &self,
        target: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        max_paths: usize,
    ) -> Result<(), DagError> {
        let here = *stack.last().expect("non-empty path");
        if here == target {
            if out.len() == max_paths {
                return Err(DagError::TooManyPaths { from: stack[0], to: target, max_paths });
            }
            out.push(stack.clone());
            return Ok(());
        }
        for &c in self.children(here) {
            if self.is_reflexive_ancestor(c, target) {
                stack.push(c);
                self.walk(target, stack, out, max_paths)?;
                stack.pop();
            }
        }
        Ok(())
    }

    /// Parses the edge-list text format: one `j i` pair per line, 1-based.
    ///
    /// Blank lines and lines starting with `#` are ignored. When `d` is
    /// `None` the node count is the largest id that appears.
    pub fn from_edge_list(text: &str, d: Option<usize>) -> Result<Self, DagError> {
        let mut edges = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(DagError::Parse { line: ln + 1, msg: "expected two node ids".into() });
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| DagError::Parse { line: ln + 1, msg: format!("{s:?}: {e}") })
            };
            edges.push((parse(fields[0])?, parse(fields[1])?));
        }
        let inferred = edges.iter().map(|&(j, i)| j.max(i)).max().unwrap_or(1);
        Self::new(d.unwrap_or(inferred), &edges)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(j, i)| format!("{j} {i}\n")).collect()
    }
}

/// Kahn's algorithm with a min-heap so ties go to the smallest id.
///
/// On failure the error names the nodes of one directed cycle.
pub fn topological_sort(d: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>, DagError> {
    let mut indeg = vec![0usize; d];
    let mut children = vec![Vec::new(); d];
    for &(j, i) in edges {
        if j == 0 || j > d || i == 0 || i > d {
            return Err(DagError::NodeOutOfRange { id: j.max(i).max(1), d });
        }
        children[j - 1].push(i);
        indeg[i - 1] += 1;
    }
    let mut heap: BinaryHeap<Reverse<usize>> =
        (1..=d).filter(|&v| indeg[v - 1] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(d);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(v);
        for &c in &children[v - 1] {
            indeg[c - 1] -= 1;
            if indeg[c - 1] == 0 {
                heap.push(Reverse(c));
            }
        }
    }
    if order.len() == d {
        return Ok(order);
    }
    Err(DagError::Cycle(find_cycle(d, &children, &indeg)))
}

// Every node left with positive in-degree has a parent that is also left,
// so walking parents backwards must revisit a node.
fn find_cycle(d: usize, children: &[Vec<usize>], indeg: &[usize]) -> Vec<usize> {
    let mut parent_in_rest = vec![0usize; d];
    for j in 1..=d {
        if indeg[j - 1] == 0 {
            continue;
        }
        for &c in &children[j - 1] {
            if indeg[c - 1] > 0 && parent_in_rest[c - 1] == 0 {
                parent_in_rest[c - 1] = j;
            }
        }
    }
    let start = (1..=d).find(|&v| indeg[v - 1] > 0).expect("cycle exists");
    let mut pos = vec![usize::MAX; d];
    let mut walk = Vec::new();
    let mut v = start;
    while pos[v - 1] == usize::MAX {
        pos[v - 1] = walk.len();
        walk.push(v);
        v = parent_in_rest[v - 1];
    }
    let mut cycle: Vec<usize> = walk[pos[v - 1]..].to_vec();
    cycle.reverse();
    cycle
}

/// Random DAG: a uniform random permutation fixes a latent order and each
/// forward pair is joined independently with probability `edge_prob`.
pub fn random_dag(d: usize, edge_prob: f64, seed: u64) -> Result<Dag, DagError> {
    if d == 0 {
        return Err(DagError::InvalidArgument("d must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(DagError::InvalidArgument(format!("edge_prob {edge_prob} not in [0, 1]")));
    }
    let mut rng = plain_rng(seed);
    let mut perm: Vec<usize> = (1..=d).collect();
    perm.shuffle(&mut rng);
    let mut edges = Vec::new();
    for a in 0..d {
        for b in (a + 1)..d {
            if rng.random::<f64>() < edge_prob {
                edges.push((perm[a], perm[b]));
            }
        }
    }
    Dag::new(d, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_extensions() {
        let g = Dag::new(4, &[(1, 2), (1, 3), (2, 4), (3, 4)]).unwrap();
        assert!(g.is_linear_extension(&[1, 3, 2, 4]));
        assert!(!g.is_linear_extension(&[2, 1, 3, 4]));
        assert!(!g.is_linear_extension(&[1, 2, 2, 4]));
        assert!(!g.is_linear_extension(&[1, 2, 3]));
    }

    fn diamond() -> Dag {
        Dag::new(4, &[(1, 2), (1, 3), (2, 4), (3, 4)]).unwrap()
    }

    fn chain() -> Dag {
        Dag::new(3, &[(1, 2), (2, 3)]).unwrap()
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn topological_examples() {
        assert_eq!(chain().topological_order(), &[1, 2, 3]);
        assert_eq!(Dag::new(3, &[]).unwrap().topological_order(), &[1, 2, 3]);
        assert_eq!(Dag::new(3, &[(3, 1), (3, 2)]).unwrap().topological_order(), &[3, 1, 2]);
    }

    #[test]
    fn cycle_is_reported() {
        match Dag::new(4, &[(1, 2), (2, 3), (3, 1), (3, 4)]) {
            Err(DagError::Cycle(c)) => {
                assert_eq!(c.len(), 3);
                assert_eq!(set(&c), set(&[1, 2, 3]));
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert_eq!(Dag::new(2, &[(1, 1)]), Err(DagError::SelfLoop(1)));
        assert_eq!(Dag::new(2, &[(1, 2), (1, 2)]), Err(DagError::DuplicateEdge(1, 2)));
        assert_eq!(Dag::new(2, &[(1, 3)]), Err(DagError::NodeOutOfRange { id: 3, d: 2 }));
        assert!(chain().ancestors(4).is_err());
        assert!(chain().descendants(0).is_err());
    }

    #[test]
    fn ancestor_examples() {
        assert_eq!(diamond().ancestors(4).unwrap(), set(&[1, 2, 3]));
        assert_eq!(chain().ancestors(1).unwrap(), set(&[]));
        assert_eq!(chain().ancestors(3).unwrap(), set(&[1, 2]));
        assert_eq!(diamond().descendants(1).unwrap(), set(&[2, 3, 4]));
        assert_eq!(diamond().descendants(4).unwrap(), set(&[]));
    }

    #[test]
    fn path_examples() {
        let dm = diamond();
        assert_eq!(dm.enumerate_paths(1, 4, 10).unwrap(), vec![vec![1, 2, 4], vec![1, 3, 4]]);
        assert_eq!(chain().enumerate_paths(1, 3, 10).unwrap(), vec![vec![1, 2, 3]]);
        assert!(dm.enumerate_paths(2, 3, 10).unwrap().is_empty());
        assert_eq!(
            dm.enumerate_paths(1, 4, 1),
            Err(DagError::TooManyPaths { from: 1, to: 4, max_paths: 1 })
        );
    }

    #[test]
    fn random_dag_examples() {
        let one = random_dag(1, 0.7, 3).unwrap();
        assert_eq!((one.node_count(), one.edge_count()), (1, 0));
        assert_eq!(random_dag(5, 1.0, 9).unwrap().edge_count(), 10);
        let g = random_dag(8, 0.3, 7).unwrap();
        assert!(g.edge_count() <= 28);
        assert_eq!(g.topological_order().len(), 8);
        assert_eq!(g, random_dag(8, 0.3, 7).unwrap());
        assert!(random_dag(3, 1.5, 0).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let dm = diamond();
        let text = format!("# diamond\n{}\n", dm.to_edge_list());
        assert_eq!(Dag::from_edge_list(&text, None).unwrap(), dm);
        let padded = Dag::from_edge_list("1 2\n", Some(4)).unwrap();
        assert_eq!(padded.node_count(), 4);
        assert!(matches!(Dag::from_edge_list("1 x\n", None), Err(DagError::Parse { line: 1, .. })));
    }

    // Oracle: closure by repeated composition of the edge relation.
    fn closure_by_composition(dag: &Dag) -> Vec<Vec<bool>> {
        let d = dag.node_count();
        let mut r = vec![vec![false; d]; d];
        for &(j, i) in dag.edges() {
            r[j - 1][i - 1] = true;
        }
        loop {
            let mut changed = false;
            for a in 0..d {
                for b in 0..d {
                    if !r[a][b] {
                        continue;
                    }
                    for c in 0..d {
                        if r[b][c] && !r[a][c] {
                            r[a][c] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return r;
            }
        }
    }

    proptest! {
        #[test]
        fn closure_and_duality(d in 1usize..=8, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let g = random_dag(d, p, seed).unwrap();
            let oracle = closure_by_composition(&g);
            let order = g.topological_order();
            let pos: Vec<usize> = {
                let mut pos = vec![0; d];
                for (k, &v) in order.iter().enumerate() { pos[v - 1] = k; }
                pos
            };
            for &(j, i) in g.edges() {
                prop_assert!(pos[j - 1] < pos[i - 1]);
            }
            for j in 1..=d {
                let de = g.descendants(j).unwrap();
                for i in 1..=d {
                    let an = g.ancestors(i).unwrap();
                    prop_assert_eq!(an.contains(&j), de.contains(&i));
                    prop_assert_eq!(an.contains(&j), oracle[j - 1][i - 1]);
                    if i != j {
                        let paths = g.enumerate_paths(j, i, DEFAULT_MAX_PATHS).unwrap();
                        prop_assert_eq!(!paths.is_empty(), an.contains(&j));
                        for path in &paths {
                            prop_assert_eq!(path[0], j);
                            prop_assert_eq!(*path.last().unwrap(), i);
                            for w in path.windows(2) {
                                prop_assert!(g.has_edge(w[0], w[1]));
                            }
                        }
                        let mut sorted = paths.clone();
                        sorted.sort();
                        prop_assert_eq!(sorted, paths);
                    }
                }
            }
        }
    }
}
