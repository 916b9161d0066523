//! Standardized causal tail coefficients.
//!
//! `Γ*[j][i] = lim E[2 G_i(X_i) − 1 | X_j > x]`, where `G_i` is the
//! distribution function of `X_i`. Rows index the conditioning variable
//! `j`, columns the evaluated variable `i`.
//!
//! At the population level the coefficient is a partial column sum of the
//! extremal weights: `Γ*[j][i] = Σ_{h ∈ An(i) ∩ An(j)} W[h][j]`. From data it
//! is estimated by averaging centered empirical ranks of `X_i` over the `k`
//! rows where `X_j` is largest.

use crate::air::WeightMatrix;
use crate::dag::Dag;
use crate::matrix::SquareMatrix;
use crate::model::SampleMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtcError {
    #[error("weights do not match the graph's ancestral support at ({h},{i}): W = {w}")]
    SupportMismatch { h: usize, i: usize, w: f64 },
    #[error("dimension mismatch: weights are {weights}x{weights}, graph has {nodes} nodes")]
    DimensionMismatch { weights: usize, nodes: usize },
    #[error("exceedance count k = {k} must satisfy 1 <= k < n = {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("column X{0} is constant; ranks are degenerate")]
    ConstantColumn(usize),
    #[error("invalid k rule {0:?} (expected power:<exponent> or fixed:<count>)")]
    InvalidKRule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CtcKind {
    Population,
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtcMatrix {
    pub kind: CtcKind,
    /// `gamma.get(j, i) = Γ*[j][i]`; diagonal stored as 1 and never used.
    pub gamma: SquareMatrix,
    /// The unstandardized coefficient `Γ = (Γ* + 1) / 2`. For estimates this
    /// is the raw mean of `Ĝ_i` before clamping.
    pub unstandardized: SquareMatrix,
    pub k_used: Option<usize>,
}

impl CtcMatrix {
    /// Wraps a standardized matrix read from elsewhere.
    pub fn from_gamma(kind: CtcKind, gamma: SquareMatrix, k_used: Option<usize>) -> Self {
        let unstandardized = gamma.map(|g| 0.5 * (g + 1.0));
        Self { kind, gamma, unstandardized, k_used }
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.gamma.get(j, i)
    }
}

/// Exact coefficients from extremal weights that respect `dag`'s
/// reflexive ancestral support.
pub fn population_ctc(weights: &WeightMatrix, dag: &Dag) -> Result<CtcMatrix, CtcError> {
    let d = dag.node_count();
    if weights.dim() != d {
        return Err(CtcError::DimensionMismatch { weights: weights.dim(), nodes: d });
    }
    for h in 1..=d {
        for i in 1..=d {
            let w = weights.get(h, i);
            if (w > 0.0) != dag.is_reflexive_ancestor(h, i) {
                return Err(CtcError::SupportMismatch { h, i, w });
            }
        }
    }
    let mut gamma = SquareMatrix::identity(d);
    for j in 1..=d {
        for i in 1..=d {
            if i == j {
                continue;
            }
            let shared: f64 = (1..=d)
                .filter(|&h| dag.is_reflexive_ancestor(h, i) && dag.is_reflexive_ancestor(h, j))
                .map(|h| weights.get(h, j))
                .sum();
            gamma.set(j, i, shared.min(1.0));
        }
    }
    Ok(CtcMatrix::from_gamma(CtcKind::Population, gamma, None))
}

/// Rank-based estimate from the `k` largest values of each conditioning
/// column. `Ĝ_i(v)` is the average rank of `v` in column `i` over `n + 1`.
pub fn empirical_ctc(samples: &SampleMatrix, k: usize) -> Result<CtcMatrix, CtcError> {
    let n = samples.rows();
    let d = samples.cols();
    if k == 0 || k >= n {
        return Err(CtcError::KOutOfRange { k, n });
    }
    let tables: Vec<(Vec<f64>, Vec<usize>)> = (1..=d)
        .into_par_iter()
        .map(|i| rank_column(samples.column(i), k).ok_or(CtcError::ConstantColumn(i)))
        .collect::<Result<_, _>>()?;

    let scale = 1.0 / (n as f64 + 1.0);
    let rows: Vec<Vec<f64>> = tables
        .par_iter()
        .map(|(_, top)| {
            tables
                .iter()
                .map(|(ranks, _)| top.iter().map(|&m| ranks[m] * scale).sum::<f64>() / k as f64)
                .collect()
        })
        .collect();

    let mut gamma = SquareMatrix::identity(d);
    let mut raw = SquareMatrix::identity(d);
    for j in 1..=d {
        for i in 1..=d {
            if i == j {
                continue;
            }
            let mean_g = rows[j - 1][i - 1];
            raw.set(j, i, mean_g);
            gamma.set(j, i, (2.0 * mean_g - 1.0).clamp(0.0, 1.0));
        }
    }
    Ok(CtcMatrix { kind: CtcKind::Estimated, gamma, unstandardized: raw, k_used: Some(k) })
}

/// Average ranks (1-based) and the indices of the `k` largest values,
/// largest first with ties by ascending row. `None` for a constant column.
fn rank_column(values: &[f64], k: usize) -> Option<(Vec<f64>, Vec<usize>)> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)));
    if values[idx[0]] == values[idx[n - 1]] {
        return None;
    }
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &m in &idx[start..end] {
            ranks[m] = avg;
        }
        start = end;
    }
    let top = idx[n - k..].iter().rev().copied().collect();
    Some((ranks, top))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRule {
    /// `⌊n^exponent⌋`
    Power(f64),
    /// `⌊count⌋`
    Fixed(f64),
}

impl Default for KRule {
    fn default() -> Self {
        KRule::Power(0.4)
    }
}

impl FromStr for KRule {
    type Err = CtcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CtcError::InvalidKRule(s.to_string());
        let (name, value) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = value.parse().map_err(|_| bad())?;
        if !(v.is_finite() && v > 0.0) {
            return Err(bad());
        }
        match name {
            "power" => Ok(KRule::Power(v)),
            "fixed" => Ok(KRule::Fixed(v)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for KRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KRule::Power(e) => write!(f, "power:{e}"),
            KRule::Fixed(c) => write!(f, "fixed:{c}"),
        }
    }
}

/// Exceedance count for `n` samples, clamped to `[10, n/4]`.
pub fn choose_k(n: usize, rule: KRule) -> usize {
    let raw = match rule {
        // powf(1e5, 0.4) can land a hair under 100
        KRule::Power(e) => ((n as f64).powf(e) + 1e-9).floor(),
        KRule::Fixed(c) => c.floor(),
    };
    let upper = (n / 4).max(1);
    (raw.max(0.0) as usize).max(10).min(upper)
}
