//! From tail coefficients to causal structure.
//!
//! A coefficient close to one, `Γ*[i][j] ≈ 1`, marks `i` as an ancestor of
//! `j`. That relation yields ancestor sets, generations and causal orders,
//! and the ancestral partial order drives the recursion that recovers the
//! extremal weight matrix `W`: nodes are visited by increasing number of
//! ancestors and, for every descendant `i` of `j`,
//! `W[j][i] = Γ*[i][j] − Σ_{k ∈ an(j)} W[k][i]`.

use crate::air::{StandardizedAir, WeightMatrix};
use crate::ctc::{CtcKind, CtcMatrix};
use crate::dag::{topological_sort, DagError};
use crate::matrix::SquareMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_DELTA_ESTIMATED: f64 = 0.05;
pub const DEFAULT_DELTA_POPULATION: f64 = 1e-9;

/// Negative recovered entries down to `-NEGATIVE_SLACK * delta` are clamped
/// to zero; anything lower is infeasible.
pub const NEGATIVE_SLACK: f64 = 10.0;

pub fn default_delta(kind: CtcKind) -> f64 {
    match kind {
        CtcKind::Population => DEFAULT_DELTA_POPULATION,
        CtcKind::Estimated => DEFAULT_DELTA_ESTIMATED,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscoveryError {
    #[error("delta must lie in [0, 0.5), got {0}")]
    InvalidDelta(f64),
    #[error("coefficient {value} at ({j},{i}) is outside [0, 1]")]
    InvalidCoefficient { j: usize, i: usize, value: f64 },
    #[error("recovered ancestor relation has a cycle through {0:?}")]
    Cyclic(Vec<usize>),
    #[error("ancestor {k} of node {j} is not resolved before {j}; the recovered relation is not a partial order")]
    Unordered { j: usize, k: usize },
    #[error("infeasible coefficients: recovered W[{j}][{i}] = {value}")]
    Infeasible { j: usize, i: usize, value: f64 },
}

impl From<DagError> for DiscoveryError {
    fn from(e: DagError) -> Self {
        match e {
            DagError::Cycle(c) => DiscoveryError::Cyclic(c),
            other => unreachable!("relation edges are in range: {other}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// (a) `X_i` causes `X_j`.
    ICausesJ,
    /// (b) `X_j` causes `X_i`.
    JCausesI,
    /// (c) no shared ancestry.
    NoLink,
    /// (d) a third node causes both; neither causes the other.
    CommonCause,
    /// A combination that no model produces.
    Inconsistent,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ICausesJ => "i_causes_j",
            Verdict::JCausesI => "j_causes_i",
            Verdict::NoLink => "no_link",
            Verdict::CommonCause => "common_cause",
            Verdict::Inconsistent => "inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    pub verdict: Verdict,
    pub gamma_ij: f64,
    pub gamma_ji: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    One,
    Interior,
    Zero,
}

fn level(g: f64, delta: f64) -> Level {
    if g >= 1.0 - delta {
        Level::One
    } else if g <= delta {
        Level::Zero
    } else {
        Level::Interior
    }
}

fn check_delta(delta: f64) -> Result<(), DiscoveryError> {
    if (0.0..0.5).contains(&delta) {
        Ok(())
    } else {
        Err(DiscoveryError::InvalidDelta(delta))
    }
}

/// Pairwise verdict from `Γ*[i][j]` and `Γ*[j][i]`. "≈1" means at least
/// `1 − delta`, "≈0" at most `delta`, anything between is interior.
pub fn classify_pair(gamma_ij: f64, gamma_ji: f64, delta: f64) -> Result<Verdict, DiscoveryError> {
    check_delta(delta)?;
    for (value, (j, i)) in [(gamma_ij, (1, 2)), (gamma_ji, (2, 1))] {
        if !(0.0..=1.0).contains(&value) {
            return Err(DiscoveryError::InvalidCoefficient { j, i, value });
        }
    }
    use Level::*;
    Ok(match (level(gamma_ij, delta), level(gamma_ji, delta)) {
        (One, Interior) => Verdict::ICausesJ,
        (Interior, One) => Verdict::JCausesI,
        (Zero, Zero) => Verdict::NoLink,
        (Interior, Interior) => Verdict::CommonCause,
        _ => Verdict::Inconsistent,
    })
}

/// Ancestor sets read off the coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AncestorSets {
    pub sets: Vec<BTreeSet<usize>>,
    pub diagnostics: Vec<String>,
}

impl AncestorSets {
    pub fn of(&self, j: usize) -> &BTreeSet<usize> {
        &self.sets[j - 1]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.sets.iter().map(BTreeSet::len).collect()
    }

    pub fn dim(&self) -> usize {
        self.sets.len()
    }

    fn relation_edges(&self) -> Vec<(usize, usize)> {
        self.sets
            .iter()
            .enumerate()
            .flat_map(|(k, an)| an.iter().map(move |&h| (h, k + 1)))
            .collect()
    }
}

/// `an(j) = { i ≠ j : Γ*[i][j] ≥ 1 − delta }`. Pairs that would be each
/// other's ancestors are dropped from both sets with a diagnostic.
pub fn ancestor_sets(gamma: &CtcMatrix, delta: f64) -> Result<AncestorSets, DiscoveryError> {
    check_delta(delta)?;
    let d = gamma.dim();
    let mut sets = vec![BTreeSet::new(); d];
    let mut diagnostics = Vec::new();
    for j in 1..=d {
        for i in 1..=d {
            if i == j || gamma.get(i, j) < 1.0 - delta {
                continue;
            }
            if gamma.get(j, i) >= 1.0 - delta {
                if i < j {
                    diagnostics.push(format!(
                        "nodes {i} and {j} both look like ancestors of each other (gamma {:.4} / {:.4}); relation dropped",
                        gamma.get(i, j),
                        gamma.get(j, i)
                    ));
                }
                continue;
            }
            sets[j - 1].insert(i);
        }
    }
    Ok(AncestorSets { sets, diagnostics })
}

/// Generation of every node: zero for nodes without ancestors, otherwise
/// one more than the largest generation among its ancestors.
pub fn generations(sets: &AncestorSets) -> Result<Vec<usize>, DiscoveryError> {
    let d = sets.dim();
    let order = topological_sort(d, &sets.relation_edges())?;
    let mut gen = vec![0usize; d];
    for j in order {
        gen[j - 1] = sets.of(j).iter().map(|&h| gen[h - 1] + 1).max().unwrap_or(0);
    }
    Ok(gen)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMode {
    /// Topological sort of the recovered ancestor relation.
    Exact,
    /// Greedy source selection by pairwise coefficient differences.
    Ease,
}

impl FromStr for OrderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(OrderMode::Exact),
            "ease" => Ok(OrderMode::Ease),
            other => Err(format!("unknown order mode {other:?} (expected exact or ease)")),
        }
    }
}

impl OrderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderMode::Exact => "exact",
            OrderMode::Ease => "ease",
        }
    }
}

/// A causal order of all nodes.
///
/// `Ease` repeatedly takes the remaining node maximizing
/// `min_{j ≠ i} (Γ*[i][j] − Γ*[j][i])` over the remaining `j`; ties go to
/// the smallest id. `delta` is used only by `Exact`.
pub fn causal_order(gamma: &CtcMatrix, delta: f64, mode: OrderMode) -> Result<Vec<usize>, DiscoveryError> {
    match mode {
        OrderMode::Exact => {
            let sets = ancestor_sets(gamma, delta)?;
            Ok(topological_sort(gamma.dim(), &sets.relation_edges())?)
        }
        OrderMode::Ease => Ok(ease_order(gamma)),
    }
}

fn ease_order(gamma: &CtcMatrix) -> Vec<usize> {
    let mut remaining: Vec<usize> = (1..=gamma.dim()).collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (pos, &i) in remaining.iter().enumerate() {
            let score = remaining
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| gamma.get(i, j) - gamma.get(j, i))
                .fold(f64::INFINITY, f64::min);
            if score > best.0 || pos == 0 {
                best = (score, pos);
            }
        }
        order.push(remaining.remove(best.1));
    }
    order
}

/// Output of [`recover_weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub weights: WeightMatrix,
    pub ancestor_sets: AncestorSets,
    pub diagnostics: Vec<String>,
}

/// Recovers `W` from the coefficient matrix.
///
/// Entries off the recovered descendant sets are exactly zero. Recovered
/// values in `[-10·delta, 0)` are clamped to zero with a diagnostic; lower
/// values make the input infeasible.
pub fn recover_weights(gamma: &CtcMatrix, delta: f64) -> Result<Recovery, DiscoveryError> {
    let sets = ancestor_sets(gamma, delta)?;
    let d = gamma.dim();
    let mut diagnostics = sets.diagnostics.clone();

    let mut order: Vec<usize> = (1..=d).collect();
    order.sort_by_key(|&j| (sets.of(j).len(), j));

    let mut w = SquareMatrix::zeros(d);
    let mut done = vec![false; d];
    let settle = |j: usize, i: usize, value: f64, diagnostics: &mut Vec<String>| {
        if value >= 0.0 {
            Ok(value)
        } else if value >= -NEGATIVE_SLACK * delta {
            diagnostics.push(format!("W[{j}][{i}] = {value:.3e} clamped to 0"));
            Ok(0.0)
        } else {
            Err(DiscoveryError::Infeasible { j, i, value })
        }
    };

    for &j in &order {
        let an = sets.of(j);
        if let Some(&k) = an.iter().find(|&&k| !done[k - 1]) {
            return Err(DiscoveryError::Unordered { j, k });
        }
        for i in 1..=d {
            if i == j || !sets.of(i).contains(&j) {
                continue;
            }
            let earlier: f64 = an.iter().map(|&k| w.get(k, i)).sum();
            let value = settle(j, i, gamma.get(i, j) - earlier, &mut diagnostics)?;
            w.set(j, i, value);
        }
        let earlier: f64 = an.iter().map(|&k| w.get(k, j)).sum();
        let complement = 1.0 - earlier;
        let from_loop = gamma.get(j, j) - earlier;
        if (complement - from_loop).abs() > delta.max(1e-12) {
            diagnostics.push(format!(
                "diagonal of node {j}: normalization gives {complement:.6}, stored gamma diagonal gives {from_loop:.6}"
            ));
        }
        let value = settle(j, j, complement, &mut diagnostics)?;
        w.set(j, j, value);
        done[j - 1] = true;
    }
    Ok(Recovery { weights: WeightMatrix::new(w), ancestor_sets: sets, diagnostics })
}

/// Everything [`discover`] derives from one coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryReport {
    pub d: usize,
    pub delta: f64,
    pub mode: OrderMode,
    pub kind: CtcKind,
    pub ancestor_sets: Vec<BTreeSet<usize>>,
    pub generations: Option<Vec<usize>>,
    /// Order for `mode`; `None` when exact mode meets a cyclic relation.
    pub causal_order: Option<Vec<usize>>,
    pub exact_order: Option<Vec<usize>>,
    pub ease_order: Vec<usize>,
    pub verdicts: Vec<PairVerdict>,
    pub recovered_weights: Option<WeightMatrix>,
    pub recovered_standardized_air: Option<StandardizedAir>,
    pub diagnostics: Vec<String>,
}

/// Runs every discovery step. Failures of individual steps (cyclic
/// relation, infeasible recovery) become diagnostics; only invalid
/// arguments are errors.
pub fn discover(
    gamma: &CtcMatrix,
    delta: f64,
    mode: OrderMode,
    alpha: Option<f64>,
) -> Result<DiscoveryReport, DiscoveryError> {
    let d = gamma.dim();
    let sets = ancestor_sets(gamma, delta)?;
    let mut diagnostics = sets.diagnostics.clone();

    let mut verdicts = Vec::new();
    for i in 1..=d {
        for j in (i + 1)..=d {
            let (gamma_ij, gamma_ji) = (gamma.get(i, j), gamma.get(j, i));
            let verdict = classify_pair(gamma_ij, gamma_ji, delta)?;
            verdicts.push(PairVerdict { i, j, verdict, gamma_ij, gamma_ji, delta });
        }
    }

    let generations = generations(&sets).map_err(|e| diagnostics.push(format!("generations: {e}"))).ok();
    let exact_order = causal_order(gamma, delta, OrderMode::Exact)
        .map_err(|e| diagnostics.push(format!("exact order: {e}")))
        .ok();
    let ease_order = ease_order(gamma);
    let causal_order = match mode {
        OrderMode::Exact => exact_order.clone(),
        OrderMode::Ease => Some(ease_order.clone()),
    };

    let (recovered_weights, recovered_standardized_air) = match recover_weights(gamma, delta) {
        Ok(rec) => {
            diagnostics.extend(rec.diagnostics.into_iter().skip(sets.diagnostics.len()));
            let ft = alpha.and_then(|a| rec.weights.to_standardized_air(a).ok());
            (Some(rec.weights), ft)
        }
        Err(e) => {
            diagnostics.push(format!("weight recovery: {e}"));
            (None, None)
        }
    };

    Ok(DiscoveryReport {
        d,
        delta,
        mode,
        kind: gamma.kind,
        ancestor_sets: sets.sets,
        generations,
        causal_order,
        exact_order,
        ease_order,
        verdicts,
        recovered_weights,
        recovered_standardized_air,
        diagnostics,
    })
}
