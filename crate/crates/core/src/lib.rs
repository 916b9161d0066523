//! Heavy-tailed homogeneous structural causal models.
//!
//! The crate covers the whole population-to-data loop:
//!
//! - [`dag`]: graphs with ancestor, descendant and path queries.
//! - [`model`]: regularly varying noise, 1-homogeneous structural functions,
//!   axiom checks and block-seeded forward simulation.
//! - [`air`]: ancestral impulse-response matrices, by unit-impulse
//!   propagation and by closed-form path formulas, plus standardization.
//! - [`ctc`]: standardized causal tail coefficients, exact (from the
//!   extremal weights) and estimated (rank-based, top-k exceedances).
//! - [`discovery`]: pairwise verdicts, ancestor sets, generations, causal
//!   orders and recursive recovery of the extremal weight matrix.
//! - [`oracle`]: Monte Carlo and brute-force cross-checks.
//! - [`cli`]: the `tailcausal` command line front end.
//!
//! Node ids are 1-based everywhere in the public API and in every file
//! format.

pub mod air;
pub mod cli;
pub mod ctc;
pub mod dag;
pub mod discovery;
pub mod matrix;
pub mod model;
pub mod oracle;
pub mod rng;

pub use air::{air_by_impulse, air_by_paths, standardize, AirError, AirMatrix, StandardizedAir, WeightMatrix};
pub use ctc::{choose_k, empirical_ctc, population_ctc, CtcError, CtcKind, CtcMatrix, KRule};
pub use dag::{random_dag, Dag, DagError};
pub use discovery::{
    ancestor_sets, causal_order, classify_pair, generations, recover_weights, AncestorSets,
    DiscoveryError, DiscoveryReport, OrderMode, PairVerdict, Verdict,
};
pub use matrix::SquareMatrix;
pub use model::{
    check_axioms, eval_structural, sample_noise, simulate, FunctionFamily, HscmModel, ModelError,
    NoiseFamily, NoiseSpec, SampleMatrix, StructuralFunctionSpec,
};
