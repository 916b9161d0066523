//! Ancestral impulse responses.
//!
//! `F[h][i]` is the value of node `i` when ancestor `h` receives a unit
//! noise impulse and every other noise variable is zero. Two routes compute
//! it: forward propagation of the impulse through the structural functions
//! ([`air_by_impulse`], any model) and closed-form sums over directed paths
//! ([`air_by_paths`], single-family models). Standardizing each column to
//! unit α-norm gives `F̃`, and the extremal weights are `W = F̃^α`.

use crate::dag::{DagError, DEFAULT_MAX_PATHS};
use crate::matrix::SquareMatrix;
use crate::model::{FunctionFamily, HscmModel};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AirError {
    #[error("closed-form path formulas need a single structural family; this model mixes families")]
    MixedFamilies,
    #[error("invalid AIR matrix: {0}")]
    InvalidAir(String),
    #[error("tail index must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Dag(#[from] DagError),
}

/// Raw impulse responses; row = source ancestor, column = target node.
#[derive(Debug, Clone, PartialEq)]
pub struct AirMatrix(SquareMatrix);

impl AirMatrix {
    /// Wraps a matrix after checking nonnegativity and a unit diagonal.
    pub fn new(matrix: SquareMatrix) -> Result<Self, AirError> {
        let d = matrix.dim();
        for i in 1..=d {
            if matrix.get(i, i) != 1.0 {
                return Err(AirError::InvalidAir(format!("diagonal entry ({i},{i}) is {}, expected 1", matrix.get(i, i))));
            }
            for h in 1..=d {
                let v = matrix.get(h, i);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(AirError::InvalidAir(format!("entry ({h},{i}) = {v}")));
                }
            }
        }
        Ok(Self(matrix))
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn get(&self, h: usize, i: usize) -> f64 {
        self.0.get(h, i)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// `F̃` with the tail index used to normalize it.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedAir {
    pub matrix: SquareMatrix,
    pub alpha: f64,
}

/// Extremal weights `W = F̃^α`: entries in `[0, 1]`, each column summing to
/// one over the target's reflexive ancestors.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(SquareMatrix);

impl WeightMatrix {
    pub fn new(matrix: SquareMatrix) -> Self {
        Self(matrix)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn get(&self, h: usize, i: usize) -> f64 {
        self.0.get(h, i)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn column_sum(&self, i: usize) -> f64 {
        (1..=self.dim()).map(|h| self.get(h, i)).sum()
    }

    /// `F̃ = W^{1/α}`. The raw `F` is not recoverable: standardization
    /// discards each column's scale.
    pub fn to_standardized_air(&self, alpha: f64) -> Result<StandardizedAir, AirError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(AirError::InvalidAlpha(alpha));
        }
        Ok(StandardizedAir { matrix: self.0.map(|w| w.max(0.0).powf(1.0 / alpha)), alpha })
    }
}

/// Unit-impulse propagation, one forward pass per source node.
pub fn air_by_impulse(model: &HscmModel) -> AirMatrix {
    let d = model.node_count();
    let columns: Vec<Vec<f64>> = (1..=d)
        .into_par_iter()
        .map(|h| {
            let mut noise = vec![0.0; d];
            noise[h - 1] = 1.0;
            let mut out = vec![0.0; d];
            model.forward(&noise, &mut out);
            out
        })
        .collect();
    let mut f = SquareMatrix::zeros(d);
    for (h, row) in (1..=d).zip(&columns) {
        for i in 1..=d {
            let v = if h == i {
                1.0
            } else if model.dag().is_ancestor(h, i) {
                row[i - 1]
            } else {
                0.0
            };
            f.set(h, i, v);
        }
    }
    AirMatrix(f)
}

/// Closed-form AIR over enumerated paths, default path cap.
pub fn air_by_paths(model: &HscmModel) -> Result<AirMatrix, AirError> {
    air_by_paths_capped(model, DEFAULT_MAX_PATHS)
}

/// Closed-form AIR for single-family models. With `P` the directed paths
/// `h ⇝ i` and `c(π)` the product of edge coefficients along `π`:
///
/// - linear: `Σ_π c(π)`
/// - max-linear: `max_π c(π)`
/// - ℓp: `(Σ_π c(π)^p)^{1/p}`, which is the linear sum only when `p = 1`
///   or the path is unique.
pub fn air_by_paths_capped(model: &HscmModel, max_paths: usize) -> Result<AirMatrix, AirError> {
    let family = model.uniform_family().ok_or(AirError::MixedFamilies)?;
    let dag = model.dag();
    let d = dag.node_count();
    let path_weight = |path: &[usize]| -> f64 {
        path.windows(2)
            .map(|e| model.function(e[1]).coefficient(e[0]).expect("path follows edges"))
            .product()
    };
    let mut f = SquareMatrix::identity(d);
    for h in 1..=d {
        for i in 1..=d {
            if !dag.is_ancestor(h, i) {
                continue;
            }
            let paths = dag.enumerate_paths(h, i, max_paths)?;
            let weights = paths.iter().map(|p| path_weight(p));
            let v = match family {
                FunctionFamily::Linear => weights.sum(),
                FunctionFamily::MaxLinear => weights.fold(0.0, f64::max),
                FunctionFamily::Lp { p } => weights.map(|w| w.powf(p)).sum::<f64>().powf(1.0 / p),
            };
            f.set(h, i, v);
        }
    }
    Ok(AirMatrix(f))
}

/// Column-wise α-norm standardization: `F̃[h][i] = F[h][i] / (Σ_k F[k][i]^α)^{1/α}`
/// and `W[h][i] = F[h][i]^α / Σ_k F[k][i]^α`.
pub fn standardize(air: &AirMatrix, alpha: f64) -> Result<(StandardizedAir, WeightMatrix), AirError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(AirError::InvalidAlpha(alpha));
    }
    let d = air.dim();
    let mut ft = SquareMatrix::zeros(d);
    let mut w = SquareMatrix::zeros(d);
    for i in 1..=d {
        if air.get(i, i) <= 0.0 {
            return Err(AirError::InvalidAir(format!("column {i} has a zero diagonal")));
        }
        let norm: f64 = (1..=d).map(|k| air.get(k, i).powf(alpha)).sum();
        let root = norm.powf(1.0 / alpha);
        for h in 1..=d {
            let v = air.get(h, i);
            if v > 0.0 {
                ft.set(h, i, v / root);
                w.set(h, i, v.powf(alpha) / norm);
            }
        }
    }
    Ok((StandardizedAir { matrix: ft, alpha }, WeightMatrix(w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::Dag;
    use crate::model::{random_model, FamilyChoice, NoiseSpec, StructuralFunctionSpec};
    use proptest::prelude::*;

    fn noise() -> NoiseSpec {
        NoiseSpec::pareto(1.0).unwrap()
    }

    fn diamond(family: FunctionFamily, c: f64) -> HscmModel {
        let dag = Dag::new(4, &[(1, 2), (1, 3), (2, 4), (3, 4)]).unwrap();
        HscmModel::uniform(dag, family, c, noise()).unwrap()
    }

    #[test]
    fn impulse_examples() {
        let single = HscmModel::uniform(Dag::new(1, &[]).unwrap(), FunctionFamily::Linear, 1.0, noise()).unwrap();
        assert_eq!(air_by_impulse(&single).matrix(), &SquareMatrix::identity(1));

        let chain = HscmModel::uniform(Dag::new(2, &[(1, 2)]).unwrap(), FunctionFamily::Linear, 0.5, noise()).unwrap();
        let f = air_by_impulse(&chain);
        assert_eq!((f.get(1, 1), f.get(1, 2), f.get(2, 2), f.get(2, 1)), (1.0, 0.5, 1.0, 0.0));

        assert_eq!(air_by_impulse(&diamond(FunctionFamily::Linear, 0.5)).get(1, 4), 0.5);
    }

    #[test]
    fn path_examples() {
        assert_eq!(air_by_paths(&diamond(FunctionFamily::MaxLinear, 0.5)).unwrap().get(1, 4), 0.25);

        let fs = vec![
            StructuralFunctionSpec::root(FunctionFamily::Linear).unwrap(),
            StructuralFunctionSpec::new(FunctionFamily::Linear, Coefs::from([(1, 2.0)])).unwrap(),
            StructuralFunctionSpec::new(FunctionFamily::Linear, Coefs::from([(2, 3.0)])).unwrap(),
        ];
        let chain = HscmModel::new(fs, noise()).unwrap();
        assert_eq!(air_by_paths(&chain).unwrap().get(1, 3), 6.0);
    }

    type Coefs = std::collections::BTreeMap<usize, f64>;

    #[test]
    fn lp_diamond_is_a_p_norm_over_paths() {
        // Two paths of weight 0.25 each: the impulse reaches node 4 as
        // ‖(0.25, 0.25)‖_p, not 0.25 + 0.25.
        let lp3 = diamond(FunctionFamily::Lp { p: 3.0 }, 0.5);
        let expect = 0.25 * 2f64.powf(1.0 / 3.0);
        let by_paths = air_by_paths(&lp3).unwrap().get(1, 4);
        let by_impulse = air_by_impulse(&lp3).get(1, 4);
        assert!((by_paths - expect).abs() < 1e-15);
        assert!((by_impulse - expect).abs() < 1e-15);
        assert!((by_impulse - 0.5).abs() > 0.1);
        let lp1 = diamond(FunctionFamily::Lp { p: 1.0 }, 0.5);
        assert!((air_by_impulse(&lp1).get(1, 4) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mixed_models_need_impulses() {
        let fs = vec![
            StructuralFunctionSpec::root(FunctionFamily::Linear).unwrap(),
            StructuralFunctionSpec::new(FunctionFamily::MaxLinear, Coefs::from([(1, 1.0)])).unwrap(),
        ];
        let m = HscmModel::new(fs, noise()).unwrap();
        assert_eq!(air_by_paths(&m), Err(AirError::MixedFamilies));
        let dense = HscmModel::uniform(Dag::new(4, &[(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]).unwrap(), FunctionFamily::Linear, 1.0, noise()).unwrap();
        assert!(matches!(air_by_paths_capped(&dense, 2), Err(AirError::Dag(DagError::TooManyPaths { .. }))));
    }

    #[test]
    fn standardize_examples() {
        let single = AirMatrix::new(SquareMatrix::identity(1)).unwrap();
        let (ft, w) = standardize(&single, 2.3).unwrap();
        assert_eq!((ft.matrix.get(1, 1), w.get(1, 1)), (1.0, 1.0));

        let chain = AirMatrix::new(SquareMatrix::from_row_major(2, vec![1.0, 1.0, 0.0, 1.0]).unwrap()).unwrap();
        let (_, w) = standardize(&chain, 1.0).unwrap();
        assert_eq!((w.get(1, 2), w.get(2, 2)), (0.5, 0.5));
        let (ft, w) = standardize(&chain, 2.0).unwrap();
        assert!((ft.matrix.get(1, 2) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((w.get(1, 2) - 0.5).abs() < 1e-15);

        assert!(AirMatrix::new(SquareMatrix::zeros(2)).is_err());
        assert!(standardize(&chain, 0.0).is_err());
    }

    #[test]
    fn weights_round_trip_to_standardized_air() {
        let f = air_by_impulse(&diamond(FunctionFamily::Linear, 0.5));
        let (ft, w) = standardize(&f, 1.5).unwrap();
        let back = w.to_standardized_air(1.5).unwrap();
        assert!(back.matrix.max_abs_diff(&ft.matrix).unwrap() < 1e-15);
    }

    fn family_choice() -> impl Strategy<Value = FamilyChoice> {
        prop_oneof![
            Just(FamilyChoice::Uniform(FunctionFamily::Linear)),
            Just(FamilyChoice::Uniform(FunctionFamily::MaxLinear)),
            (0.3f64..5.0).prop_map(|p| FamilyChoice::Uniform(FunctionFamily::Lp { p })),
        ]
    }

    proptest! {
        #[test]
        fn impulse_matches_paths_and_invariants(
            d in 1usize..=8,
            prob in 0.0f64..=1.0,
            choice in family_choice(),
            alpha in 0.5f64..3.0,
            seed in any::<u64>(),
            c in 0.01f64..100.0,
        ) {
            let model = random_model(d, prob, choice, (0.1, 2.0), NoiseSpec::pareto(alpha).unwrap(), seed).unwrap();
            let fi = air_by_impulse(&model);
            let fp = air_by_paths(&model).unwrap();
            let dag = model.dag();
            for h in 1..=d {
                for i in 1..=d {
                    let (a, b) = (fi.get(h, i), fp.get(h, i));
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
                    prop_assert_eq!(a > 0.0, dag.is_reflexive_ancestor(h, i));
                }
            }
            // Impulse scaling.
            for h in 1..=d {
                let mut noise = vec![0.0; d];
                noise[h - 1] = c;
                let mut out = vec![0.0; d];
                model.forward(&noise, &mut out);
                for i in 1..=d {
                    if dag.is_reflexive_ancestor(h, i) {
                        prop_assert!((out[i - 1] - c * fi.get(h, i)).abs() <= 1e-12 * c * fi.get(h, i));
                    }
                }
            }
            let (_, w) = standardize(&fi, alpha).unwrap();
            for i in 1..=d {
                prop_assert!((w.column_sum(i) - 1.0).abs() <= 1e-12);
                for h in 1..=d {
                    prop_assert!((0.0..=1.0).contains(&w.get(h, i)));
                    prop_assert_eq!(w.get(h, i) > 0.0, dag.is_reflexive_ancestor(h, i));
                }
            }
        }
    }
}
