//! Noise laws, structural functions, model validation and simulation.
//!
//! A model assigns every node `i` a structural function
//! `X_i = f_i(X_pa(i), ε_i)` from one of three 1-homogeneous families
//! (linear, max-linear, ℓp) and drives all nodes with i.i.d. nonnegative
//! regularly varying noise of a shared tail index α. Families may be mixed
//! across nodes.

use crate::dag::{random_dag, Dag, DagError};
use crate::rng::{block_count, block_rng, open01, plain_rng, BLOCK_SIZE};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("invalid structural function: {0}")]
    InvalidFunction(String),
    #[error("node {node}: coefficient keys {found:?} do not match parents {expected:?}")]
    ParentMismatch { node: usize, expected: Vec<usize>, found: Vec<usize> },
    #[error("structural inputs must be nonnegative and finite, got {0}")]
    Domain(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("samples line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Dag(#[from] DagError),
}

// ---------------------------------------------------------------------------
// Noise

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    /// `P(ε > x) = (x/s)^{-α}` for `x ≥ s`.
    Pareto,
    /// `P(ε > x) = 1 − exp(−(x/s)^{-α})`.
    Frechet,
    /// `P(ε > x) = (1 + α ln(x/s)) (x/s)^{-α}` for `x ≥ s`; slowly varying
    /// part proportional to `log x`. Drawn as `s (U₁U₂)^{-1/α}`.
    LogPerturbedPareto,
}

impl NoiseFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseFamily::Pareto => "pareto",
            NoiseFamily::Frechet => "frechet",
            NoiseFamily::LogPerturbedPareto => "log_perturbed_pareto",
        }
    }
}

impl std::str::FromStr for NoiseFamily {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pareto" => Ok(Self::Pareto),
            "frechet" => Ok(Self::Frechet),
            "log_perturbed_pareto" => Ok(Self::LogPerturbedPareto),
            other => Err(ModelError::InvalidNoise(format!("unknown noise family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    family: NoiseFamily,
    alpha: f64,
    scale: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, alpha: f64, scale: f64) -> Result<Self, ModelError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ModelError::InvalidNoise(format!("tail index must be positive, got {alpha}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(ModelError::InvalidNoise(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { family, alpha, scale })
    }

    pub fn pareto(alpha: f64) -> Result<Self, ModelError> {
        Self::new(NoiseFamily::Pareto, alpha, 1.0)
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Maps uniforms on (0, 1) to a noise value. `v` is consumed only by
    /// [`NoiseFamily::LogPerturbedPareto`].
    pub fn from_uniforms(&self, u: f64, v: f64) -> f64 {
        let inv = -1.0 / self.alpha;
        match self.family {
            NoiseFamily::Pareto => self.scale * u.powf(inv),
            NoiseFamily::Frechet => self.scale * (-u.ln()).powf(inv),
            NoiseFamily::LogPerturbedPareto => self.scale * (u * v).powf(inv),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open01(rng);
        let v = match self.family {
            NoiseFamily::LogPerturbedPareto => open01(rng),
            _ => 1.0,
        };
        self.from_uniforms(u, v)
    }

    /// Exact tail `P(ε > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        let t = x / self.scale;
        match self.family {
            NoiseFamily::Pareto => {
                if t <= 1.0 {
                    1.0
                } else {
                    t.powf(-self.alpha)
                }
            }
            NoiseFamily::Frechet => {
                if t <= 0.0 {
                    1.0
                } else {
                    -(-t.powf(-self.alpha)).exp_m1()
                }
            }
            NoiseFamily::LogPerturbedPareto => {
                if t <= 1.0 {
                    1.0
                } else {
                    (1.0 + self.alpha * t.ln()) * t.powf(-self.alpha)
                }
            }
        }
    }

    /// The level `x` with `P(ε > x) = tail_prob`, for `tail_prob ∈ (0, 1)`.
    pub fn upper_quantile(&self, tail_prob: f64) -> f64 {
        let inv = -1.0 / self.alpha;
        match self.family {
            NoiseFamily::Pareto => self.scale * tail_prob.powf(inv),
            NoiseFamily::Frechet => self.scale * (-(-tail_prob).ln_1p()).powf(inv),
            NoiseFamily::LogPerturbedPareto => {
                // Solve (1 + z) e^{-z} = p for z = α ln(x/s) ≥ 0; the left side
                // decreases strictly from 1.
                let target = tail_prob.ln();
                let g = |z: f64| (1.0 + z).ln() - z - target;
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                while g(hi) > 0.0 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                self.scale * (0.5 * (lo + hi) / self.alpha).exp()
            }
        }
    }
}

/// `n` i.i.d. draws, block-seeded: identical to column 1 of a one-node
/// [`simulate`] run with the same seed.
pub fn sample_noise(spec: &NoiseSpec, n: usize, seed: u64) -> Vec<f64> {
    (0..block_count(n))
        .into_par_iter()
        .flat_map_iter(|b| {
            let rows = block_rows(n, b);
            let mut rng = block_rng(seed, b as u64);
            (0..rows).map(move |_| spec.draw(&mut rng))
        })
        .collect()
}

fn block_rows(n: usize, block: usize) -> usize {
    BLOCK_SIZE.min(n - block * BLOCK_SIZE)
}

// ---------------------------------------------------------------------------
// Structural functions

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionFamily {
    Linear,
    MaxLinear,
    Lp { p: f64 },
}

impl FunctionFamily {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionFamily::Linear => "linear",
            FunctionFamily::MaxLinear => "max_linear",
            FunctionFamily::Lp { .. } => "lp",
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self {
            FunctionFamily::Lp { p } => Some(*p),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        match *self {
            FunctionFamily::Lp { p } if !(p.is_finite() && p > 0.0) => {
                Err(ModelError::InvalidFunction(format!("lp requires p in (0, inf), got {p}")))
            }
            _ => Ok(()),
        }
    }

    /// Aggregates already-scaled parent terms `c_h x_h` with the noise `z`.
    pub(crate) fn combine(&self, terms: &[f64], z: f64) -> f64 {
        match *self {
            FunctionFamily::Linear => terms.iter().sum::<f64>() + z,
            FunctionFamily::MaxLinear => terms.iter().copied().fold(z, f64::max),
            FunctionFamily::Lp { p } => {
                let m = terms.iter().copied().fold(z, f64::max);
                if m == 0.0 {
                    return 0.0;
                }
                let s: f64 = terms.iter().map(|&t| (t / m).powf(p)).sum::<f64>() + (z / m).powf(p);
                m * s.powf(1.0 / p)
            }
        }
    }
}

impl fmt::Display for FunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionFamily::Lp { p } => write!(f, "lp(p={p})"),
            other => f.write_str(other.name()),
        }
    }
}

/// One node's structural function: a family plus strictly positive
/// coefficients keyed by parent id.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralFunctionSpec {
    family: FunctionFamily,
    coefficients: BTreeMap<usize, f64>,
}

impl StructuralFunctionSpec {
    pub fn new(family: FunctionFamily, coefficients: BTreeMap<usize, f64>) -> Result<Self, ModelError> {
        family.validate()?;
        for (&h, &c) in &coefficients {
            if !(c.is_finite() && c > 0.0) {
                return Err(ModelError::InvalidFunction(format!(
                    "coefficient for parent {h} must be positive (delete the edge instead), got {c}"
                )));
            }
        }
        Ok(Self { family, coefficients })
    }

    /// A root: no parents.
    pub fn root(family: FunctionFamily) -> Result<Self, ModelError> {
        Self::new(family, BTreeMap::new())
    }

    pub fn family(&self) -> FunctionFamily {
        self.family
    }

    pub fn coefficients(&self) -> &BTreeMap<usize, f64> {
        &self.coefficients
    }

    pub fn coefficient(&self, parent: usize) -> Option<f64> {
        self.coefficients.get(&parent).copied()
    }

    /// Evaluates `f(x_pa, z)`; `parent_values` must be keyed exactly by
    /// this function's parents.
    pub fn eval(&self, parent_values: &BTreeMap<usize, f64>, noise: f64) -> Result<f64, ModelError> {
        if !parent_values.keys().eq(self.coefficients.keys()) {
            return Err(ModelError::InvalidArgument(format!(
                "parent values keyed by {:?}, expected {:?}",
                parent_values.keys().collect::<Vec<_>>(),
                self.coefficients.keys().collect::<Vec<_>>()
            )));
        }
        for &v in parent_values.values().chain(std::iter::once(&noise)) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::Domain(v));
            }
        }
        let terms: Vec<f64> =
            self.coefficients.iter().map(|(h, c)| c * parent_values[h]).collect();
        Ok(self.family.combine(&terms, noise))
    }

    /// Evaluates on the raw input vector `(x_pa in ascending parent id, z)`.
    fn eval_vector(&self, input: &[f64]) -> f64 {
        let (z, xs) = input.split_last().expect("input includes the noise coordinate");
        let terms: Vec<f64> = self.coefficients.values().zip(xs).map(|(c, x)| c * x).collect();
        self.family.combine(&terms, *z)
    }
}

/// Free-function form of [`StructuralFunctionSpec::eval`].
pub fn eval_structural(
    spec: &StructuralFunctionSpec,
    parent_values: &BTreeMap<usize, f64>,
    noise_value: f64,
) -> Result<f64, ModelError> {
    spec.eval(parent_values, noise_value)
}

// ---------------------------------------------------------------------------
// Axiom checks

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    NonNegativity,
    VanishingOnlyAtOrigin,
    Continuity,
    Homogeneity,
    DeletionMonotonicity,
}

impl Axiom {
    pub const ALL: [Axiom; 5] = [
        Axiom::NonNegativity,
        Axiom::VanishingOnlyAtOrigin,
        Axiom::Continuity,
        Axiom::Homogeneity,
        Axiom::DeletionMonotonicity,
    ];
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomOutcome {
    pub axiom: Axiom,
    pub checks: usize,
    pub failures: usize,
    pub first_counterexample: Option<String>,
}

impl AxiomOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub family: String,
    pub trials: usize,
    pub tolerance: f64,
    pub outcomes: Vec<AxiomOutcome>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(AxiomOutcome::passed)
    }

    pub fn outcome(&self, axiom: Axiom) -> &AxiomOutcome {
        self.outcomes.iter().find(|o| o.axiom == axiom).expect("every axiom is reported")
    }
}

/// Continuity bound applied at the smallest probe step (relative to
/// `1 + f(x)`). Homogeneity and monotonicity use the caller's tolerance.
const CONTINUITY_BOUND: f64 = 1e-4;
const CONTINUITY_STEPS: [f64; 4] = [1e-3, 1e-6, 1e-9, 1e-12];

/// Randomized check of the five structural-function axioms.
///
/// Each trial draws a nonnegative input (coordinates zero with probability
/// 0.2, otherwise log-uniform over `[e^-8, e^8]`), a scale `c` log-uniform
/// over `[e^-10, e^10]` and a nonempty coordinate subset `J`.
pub fn check_axioms(spec: &StructuralFunctionSpec, trials: usize, tol: f64, seed: u64) -> AxiomReport {
    let mut rng = plain_rng(seed);
    let m = spec.coefficients.len() + 1;
    let mut outcomes: Vec<AxiomOutcome> = Axiom::ALL
        .iter()
        .map(|&axiom| AxiomOutcome { axiom, checks: 0, failures: 0, first_counterexample: None })
        .collect();
    let mut record = |axiom: Axiom, ok: bool, detail: &dyn Fn() -> String| {
        let o = &mut outcomes[Axiom::ALL.iter().position(|&a| a == axiom).unwrap()];
        o.checks += 1;
        if !ok {
            o.failures += 1;
            if o.first_counterexample.is_none() {
                o.first_counterexample = Some(detail());
            }
        }
    };

    let zero = vec![0.0; m];
    let f0 = spec.eval_vector(&zero);
    record(Axiom::VanishingOnlyAtOrigin, f0 == 0.0, &|| format!("f(0) = {f0}"));

    for _ in 0..trials {
        let x: Vec<f64> = (0..m)
            .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random_range(-8.0f64..8.0).exp() })
            .collect();
        let fx = spec.eval_vector(&x);
        record(Axiom::NonNegativity, fx >= 0.0 && fx.is_finite(), &|| format!("f({x:?}) = {fx}"));

        let nonzero = x.iter().any(|&v| v > 0.0);
        record(Axiom::VanishingOnlyAtOrigin, (fx == 0.0) != nonzero, &|| {
            format!("f({x:?}) = {fx}")
        });

        let c = rng.random_range(-10.0f64..10.0).exp();
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let fcx = spec.eval_vector(&cx);
        let err = (fcx - c * fx).abs();
        record(Axiom::Homogeneity, err <= tol * (1.0 + c * fx), &|| {
            format!("c = {c}, x = {x:?}: f(cx) = {fcx}, c f(x) = {}", c * fx)
        });

        let mut subset: Vec<bool> = (0..m).map(|_| rng.random::<bool>()).collect();
        if !subset.iter().any(|&b| b) {
            subset[rng.random_range(0..m)] = true;
        }
        let xj: Vec<f64> = x.iter().zip(&subset).map(|(&v, &keep)| if keep { v } else { 0.0 }).collect();
        let fxj = spec.eval_vector(&xj);
        record(Axiom::DeletionMonotonicity, fx >= fxj - tol * (1.0 + fx), &|| {
            format!("x = {x:?}, J = {subset:?}: f(x) = {fx} < f(x_J) = {fxj}")
        });

        let dir: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let mut prev = f64::INFINITY;
        let mut ok = true;
        let mut last = 0.0;
        for step in CONTINUITY_STEPS {
            let xe: Vec<f64> = x.iter().zip(&dir).map(|(v, u)| v + step * u).collect();
            let delta = (spec.eval_vector(&xe) - fx).abs();
            ok &= delta <= prev;
            prev = delta;
            last = delta;
        }
        ok &= last <= CONTINUITY_BOUND * (1.0 + fx);
        record(Axiom::Continuity, ok, &|| format!("x = {x:?}: |f(x + h u) - f(x)| = {last} at h = 1e-12"));
    }

    AxiomReport { family: spec.family.to_string(), trials, tolerance: tol, outcomes }
}

// ---------------------------------------------------------------------------
// Models

#[derive(Debug, Clone, PartialEq)]
pub struct HscmModel {
    dag: Dag,
    functions: Vec<StructuralFunctionSpec>,
    noise: NoiseSpec,
}

impl HscmModel {
    /// Builds the model; node `i` is `functions[i - 1]` and the graph is
    /// read off the coefficient keys.
    pub fn new(functions: Vec<StructuralFunctionSpec>, noise: NoiseSpec) -> Result<Self, ModelError> {
        let d = functions.len();
        let edges: Vec<(usize, usize)> = functions
            .iter()
            .enumerate()
            .flat_map(|(k, f)| f.coefficients.keys().map(move |&h| (h, k + 1)))
            .collect();
        let dag = Dag::new(d, &edges)?;
        Ok(Self { dag, functions, noise })
    }

    /// Builds the model on an existing graph, checking that node `i`'s
    /// coefficient keys equal `pa(i)`.
    pub fn with_dag(dag: Dag, functions: Vec<StructuralFunctionSpec>, noise: NoiseSpec) -> Result<Self, ModelError> {
        if functions.len() != dag.node_count() {
            return Err(ModelError::InvalidArgument(format!(
                "{} structural functions for {} nodes",
                functions.len(),
                dag.node_count()
            )));
        }
        for i in dag.nodes() {
            let found: Vec<usize> = functions[i - 1].coefficients.keys().copied().collect();
            if found != dag.parents(i) {
                return Err(ModelError::ParentMismatch { node: i, expected: dag.parents(i).to_vec(), found });
            }
        }
        Ok(Self { dag, functions, noise })
    }

    /// Every node uses `family` and every edge carries `coef`.
    pub fn uniform(dag: Dag, family: FunctionFamily, coef: f64, noise: NoiseSpec) -> Result<Self, ModelError> {
        let functions = dag
            .nodes()
            .map(|i| StructuralFunctionSpec::new(family, dag.parents(i).iter().map(|&h| (h, coef)).collect()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::with_dag(dag, functions, noise)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn node_count(&self) -> usize {
        self.dag.node_count()
    }

    pub fn function(&self, i: usize) -> &StructuralFunctionSpec {
        &self.functions[i - 1]
    }

    pub fn functions(&self) -> &[StructuralFunctionSpec] {
        &self.functions
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn alpha(&self) -> f64 {
        self.noise.alpha
    }

    /// The shared family (same variant and, for ℓp, same p), if any.
    pub fn uniform_family(&self) -> Option<FunctionFamily> {
        let first = self.functions.first()?.family;
        self.functions.iter().all(|f| f.family == first).then_some(first)
    }

    /// Forward pass: writes `X_i` into `out[i - 1]` given `noise[i - 1] = ε_i`.
    pub fn forward(&self, noise: &[f64], out: &mut [f64]) {
        let mut terms = Vec::new();
        for &i in self.dag.topological_order() {
            let f = &self.functions[i - 1];
            terms.clear();
            terms.extend(f.coefficients.iter().map(|(&h, &c)| c * out[h - 1]));
            out[i - 1] = f.family.combine(&terms, noise[i - 1]);
        }
    }
}

/// How [`random_model`] assigns structural families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyChoice {
    Uniform(FunctionFamily),
    /// Each node independently from linear, max-linear and ℓp with
    /// `p ∈ {0.5, 2, 3}`.
    Mixed,
}

pub const MIXED_FAMILIES: [FunctionFamily; 5] = [
    FunctionFamily::Linear,
    FunctionFamily::MaxLinear,
    FunctionFamily::Lp { p: 0.5 },
    FunctionFamily::Lp { p: 2.0 },
    FunctionFamily::Lp { p: 3.0 },
];

/// Random model: [`random_dag`] structure with coefficients uniform on
/// `coef_range`.
pub fn random_model(
    d: usize,
    edge_prob: f64,
    families: FamilyChoice,
    coef_range: (f64, f64),
    noise: NoiseSpec,
    seed: u64,
) -> Result<HscmModel, ModelError> {
    let (lo, hi) = coef_range;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(ModelError::InvalidArgument(format!("coefficient range ({lo}, {hi}) must satisfy 0 < lo < hi")));
    }
    let dag = random_dag(d, edge_prob, seed)?;
    let mut rng = plain_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let functions = dag
        .nodes()
        .map(|i| {
            let family = match families {
                FamilyChoice::Uniform(f) => f,
                FamilyChoice::Mixed => MIXED_FAMILIES[rng.random_range(0..MIXED_FAMILIES.len())],
            };
            let coefs = dag.parents(i).iter().map(|&h| (h, rng.random_range(lo..hi))).collect();
            StructuralFunctionSpec::new(family, coefs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    HscmModel::with_dag(dag, functions, noise)
}

// ---------------------------------------------------------------------------
// Samples

/// `n` realizations of `d` nonnegative variables, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    columns: Vec<Vec<f64>>,
}

impl SampleMatrix {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.is_empty() || n == 0 {
            return Err(ModelError::InvalidArgument("sample matrix must be non-empty".into()));
        }
        for col in &columns {
            if col.len() != n {
                return Err(ModelError::InvalidArgument("ragged sample columns".into()));
            }
            if let Some(&bad) = col.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(ModelError::Domain(bad));
            }
        }
        Ok(Self { n, columns })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    /// Column `i` (1-based).
    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i - 1]
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    pub fn to_csv(&self) -> String {
        let d = self.cols();
        let mut out = String::with_capacity(self.n * d * 24);
        let header: Vec<String> = (1..=d).map(|i| format!("X{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..self.n {
            for (k, col) in self.columns.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&crate::matrix::format_f64(col[r]));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(ModelError::Csv { line: 1, msg: "empty file".into() })?;
        let names: Vec<&str> = header.trim().split(',').collect();
        for (k, name) in names.iter().enumerate() {
            if *name != format!("X{}", k + 1) {
                return Err(ModelError::Csv { line: 1, msg: format!("expected header X1..X{}, got {name:?}", names.len()) });
            }
        }
        let d = names.len();
        let mut columns = vec![Vec::new(); d];
        for (ln, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d {
                return Err(ModelError::Csv { line: ln + 1, msg: format!("expected {d} fields, got {}", fields.len()) });
            }
            for (col, field) in columns.iter_mut().zip(fields) {
                let v: f64 = field
                    .parse()
                    .map_err(|e| ModelError::Csv { line: ln + 1, msg: format!("{field:?}: {e}") })?;
                col.push(v);
            }
        }
        Self::from_columns(columns)
    }
}

/// Simulates `n` replications; see [`simulate_with_noise`].
pub fn simulate(model: &HscmModel, n: usize, seed: u64) -> SampleMatrix {
    simulate_with_noise(model, n, seed).0
}

/// Simulates `n` replications and also returns the noise that produced
/// them. Each replication draws `ε_1, …, ε_d` in id order from its block's
/// stream and then evaluates nodes in topological order.
pub fn simulate_with_noise(model: &HscmModel, n: usize, seed: u64) -> (SampleMatrix, SampleMatrix) {
    assert!(n >= 1, "simulate needs at least one replication");
    let d = model.node_count();
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = (0..block_count(n))
        .into_par_iter()
        .map(|b| {
            let rows = block_rows(n, b);
            let mut rng = block_rng(seed, b as u64);
            let mut xs = vec![0.0; rows * d];
            let mut eps = vec![0.0; rows * d];
            for r in 0..rows {
                let e = &mut eps[r * d..(r + 1) * d];
                e.iter_mut().for_each(|v| *v = model.noise.draw(&mut rng));
                model.forward(e, &mut xs[r * d..(r + 1) * d]);
            }
            (xs, eps)
        })
        .collect();
    let mut x_cols = vec![Vec::with_capacity(n); d];
    let mut e_cols = vec![Vec::with_capacity(n); d];
    for (xs, eps) in &blocks {
        for (rx, re) in xs.chunks_exact(d).zip(eps.chunks_exact(d)) {
            for k in 0..d {
                x_cols[k].push(rx[k]);
                e_cols[k].push(re[k]);
            }
        }
    }
    (SampleMatrix { n, columns: x_cols }, SampleMatrix { n, columns: e_cols })
}
