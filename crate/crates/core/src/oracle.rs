//! Independent checks of the analytic modules.
//!
//! - [`mc_tail_ratio`]: Monte Carlo estimate of `P(X_i > x) / P(ε > x)` at a
//!   high noise quantile, to compare with `Σ_{h ∈ An(i)} F[h][i]^α`.
//! - [`brute_force_ctc`]: a direct conditional mean over threshold
//!   exceedances. It shares nothing with [`crate::ctc::empirical_ctc`]
//!   except the simulated data.
//! - [`exhaustive_roundtrip`]: the full population pipeline on many random
//!   models, reporting the worst recovery error.

use crate::air::{air_by_impulse, standardize};
use crate::ctc::population_ctc;
use crate::discovery::{recover_weights, DEFAULT_DELTA_POPULATION};
use crate::model::{random_model, simulate, FamilyChoice, FunctionFamily, HscmModel, ModelError, NoiseSpec};
use crate::rng::{derive_seed, plain_rng};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Required expected exceedance count `n (1 − quantile)`.
pub const MIN_EXPECTED_EXCEEDANCES: f64 = 200.0;
/// Fewer realized exceedances than this is an error.
pub const MIN_ACHIEVED_EXCEEDANCES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("only {achieved} exceedances (need at least {required}); increase n or lower the quantile")]
    TooFewExceedances { achieved: usize, required: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_tail_args(model: &HscmModel, nodes: &[usize], quantile: f64, n: usize) -> Result<(), OracleError> {
    for &v in nodes {
        if v == 0 || v > model.node_count() {
            return Err(OracleError::InvalidArgument(format!("node {v} out of range 1..={}", model.node_count())));
        }
    }
    if !(quantile > 0.9 && quantile < 1.0) {
        return Err(OracleError::InvalidArgument(format!("quantile {quantile} not in (0.9, 1)")));
    }
    let expected = n as f64 * (1.0 - quantile);
    if expected < MIN_EXPECTED_EXCEEDANCES {
        return Err(OracleError::InvalidArgument(format!(
            "n (1 - quantile) = {expected:.1} expected exceedances, need at least {MIN_EXPECTED_EXCEEDANCES}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRatio {
    pub node: usize,
    pub quantile: f64,
    pub threshold: f64,
    pub exceedances: usize,
    pub ratio: f64,
    /// `Σ_{h ∈ An(node)} F[h][node]^α`
    pub target: f64,
}

impl TailRatio {
    pub fn relative_error(&self) -> f64 {
        (self.ratio - self.target).abs() / self.target
    }
}

/// Empirical `P(X_node > x)` over the exact `P(ε > x)`, with `x` the noise
/// level exceeded with probability `1 − quantile`.
pub fn mc_tail_ratio(
    model: &HscmModel,
    node: usize,
    quantile: f64,
    n: usize,
    seed: u64,
) -> Result<TailRatio, OracleError> {
    check_tail_args(model, &[node], quantile, n)?;
    let noise = model.noise();
    let threshold = noise.upper_quantile(1.0 - quantile);
    let samples = simulate(model, n, seed);
    let exceedances = samples.column(node).iter().filter(|&&v| v > threshold).count();
    if exceedances < MIN_ACHIEVED_EXCEEDANCES {
        return Err(OracleError::TooFewExceedances { achieved: exceedances, required: MIN_ACHIEVED_EXCEEDANCES });
    }
    let ratio = (exceedances as f64 / n as f64) / noise.survival(threshold);
    let air = air_by_impulse(model);
    let target = (1..=model.node_count()).map(|h| air.get(h, node).powf(model.alpha())).sum();
    Ok(TailRatio { node, quantile, threshold, exceedances, ratio, target })
}

/// Mean of `2 Ĝ_i(X_i) − 1` over rows where `X_j` exceeds its empirical
/// `quantile`, with `Ĝ_i(v) = #{X_i ≤ v} / (n + 1)`.
pub fn brute_force_ctc(
    model: &HscmModel,
    j: usize,
    i: usize,
    n: usize,
    quantile: f64,
    seed: u64,
) -> Result<f64, OracleError> {
    check_tail_args(model, &[j, i], quantile, n)?;
    if i == j {
        return Err(OracleError::InvalidArgument("brute_force_ctc needs two distinct nodes".into()));
    }
    let samples = simulate(model, n, seed);
    let xj = samples.column(j);
    let xi = samples.column(i);

    let mut sorted_j = xj.to_vec();
    sorted_j.sort_by(f64::total_cmp);
    let cut = ((quantile * n as f64).ceil() as usize).clamp(1, n) - 1;
    let threshold = sorted_j[cut];

    let mut sorted_i = xi.to_vec();
    sorted_i.sort_by(f64::total_cmp);
    let ecdf = |v: f64| sorted_i.partition_point(|&s| s <= v) as f64 / (n as f64 + 1.0);

    let (sum, count) = xj
        .iter()
        .zip(xi)
        .filter(|(&a, _)| a > threshold)
        .fold((0.0, 0usize), |(s, c), (_, &b)| (s + 2.0 * ecdf(b) - 1.0, c + 1));
    if count < MIN_ACHIEVED_EXCEEDANCES {
        return Err(OracleError::TooFewExceedances { achieved: count, required: MIN_ACHIEVED_EXCEEDANCES });
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripCase {
    pub d: usize,
    pub family: String,
    pub alpha: f64,
    pub edge_prob: f64,
    pub edges: usize,
    pub seed: u64,
    pub max_error: f64,
    pub support_ok: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct FamilySummary {
    pub graphs: usize,
    pub max_error: f64,
    pub support_mismatches: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub d_max: usize,
    pub graphs_per_size: usize,
    pub seed: u64,
    pub graphs: usize,
    pub max_error: f64,
    pub support_mismatches: usize,
    pub failures: usize,
    pub per_family: BTreeMap<String, FamilySummary>,
    /// Up to five cases with the largest error, failures first.
    pub worst_cases: Vec<RoundtripCase>,
}

impl RoundtripReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.failures == 0 && self.support_mismatches == 0 && self.max_error <= tol
    }
}

pub const ROUNDTRIP_ALPHAS: [f64; 4] = [0.8, 1.0, 1.5, 2.7];
const LP_PS: [f64; 3] = [0.5, 2.0, 3.0];

/// One random population round trip: model → AIR → W → Γ* → recovered W.
pub fn roundtrip_case(d: usize, seed: u64) -> RoundtripCase {
    let mut rng = plain_rng(seed);
    let alpha = ROUNDTRIP_ALPHAS[rng.random_range(0..ROUNDTRIP_ALPHAS.len())];
    let edge_prob = rng.random_range(0.2..0.8);
    let (choice, family) = match rng.random_range(0..4) {
        0 => (FamilyChoice::Uniform(FunctionFamily::Linear), "linear"),
        1 => (FamilyChoice::Uniform(FunctionFamily::MaxLinear), "max_linear"),
        2 => {
            let p = LP_PS[rng.random_range(0..LP_PS.len())];
            (FamilyChoice::Uniform(FunctionFamily::Lp { p }), "lp")
        }
        _ => (FamilyChoice::Mixed, "mixed"),
    };
    let noise = NoiseSpec::pareto(alpha).expect("positive alpha");
    let model = random_model(d, edge_prob, choice, (0.1, 2.0), noise, seed).expect("valid random model");
    let dag = model.dag();
    let mut case = RoundtripCase {
        d,
        family: family.to_string(),
        alpha,
        edge_prob,
        edges: dag.edge_count(),
        seed,
        max_error: 0.0,
        support_ok: true,
        failure: None,
    };
    let (_, w) = standardize(&air_by_impulse(&model), alpha).expect("impulse AIR has unit diagonal");
    let gamma = match population_ctc(&w, dag) {
        Ok(g) => g,
        Err(e) => {
            case.failure = Some(e.to_string());
            return case;
        }
    };
    match recover_weights(&gamma, DEFAULT_DELTA_POPULATION) {
        Ok(rec) => {
            case.max_error = rec.weights.matrix().max_abs_diff(w.matrix()).unwrap_or(f64::INFINITY);
            case.support_ok = dag.nodes().all(|j| {
                dag.ancestors(j).map(|an| &an == rec.ancestor_sets.of(j)).unwrap_or(false)
                    && dag.nodes().all(|i| (rec.weights.get(j, i) > 0.0) == dag.is_reflexive_ancestor(j, i))
            });
        }
        Err(e) => case.failure = Some(e.to_string()),
    }
    case
}

/// Runs `graphs_per_size` round trips for every `d` in `1..=d_max`.
pub fn exhaustive_roundtrip(d_max: usize, graphs_per_size: usize, seed: u64) -> Result<RoundtripReport, OracleError> {
    if d_max == 0 || d_max > 10 {
        return Err(OracleError::InvalidArgument(format!("d_max = {d_max} must lie in 1..=10")));
    }
    let jobs: Vec<(usize, usize)> =
        (1..=d_max).flat_map(|d| (0..graphs_per_size).map(move |g| (d, g))).collect();
    let cases: Vec<RoundtripCase> = jobs
        .par_iter()
        .map(|&(d, g)| roundtrip_case(d, derive_seed(seed, d as u64, g as u64)))
        .collect();

    let mut per_family: BTreeMap<String, FamilySummary> = ["linear", "max_linear", "lp", "mixed"]
        .iter()
        .map(|f| (f.to_string(), FamilySummary::default()))
        .collect();
    for c in &cases {
        let s = per_family.entry(c.family.clone()).or_default();
        s.graphs += 1;
        s.max_error = s.max_error.max(c.max_error);
        s.support_mismatches += usize::from(!c.support_ok);
        s.failures += usize::from(c.failure.is_some());
    }
    let mut worst = cases.clone();
    worst.sort_by(|a, b| {
        b.failure.is_some().cmp(&a.failure.is_some()).then(b.max_error.total_cmp(&a.max_error))
    });
    worst.truncate(5);
    Ok(RoundtripReport {
        d_max,
        graphs_per_size,
        seed,
        graphs: cases.len(),
        max_error: cases.iter().map(|c| c.max_error).fold(0.0, f64::max),
        support_mismatches: cases.iter().filter(|c| !c.support_ok).count(),
        failures: cases.iter().filter(|c| c.failure.is_some()).count(),
        per_family,
        worst_cases: worst,
    })
}
