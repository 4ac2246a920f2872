//! Affine-equivariant, rank-weighted L-estimators of multivariate location.
//!
//! The estimators rank observations by their Mahalanobis distance from a
//! current center and re-center on a rank-weighted average, starting from
//! the sample mean. Distances and ranks are affine invariant, so every
//! iterate is affine equivariant. Alongside the estimators the crate ships
//! baseline comparators, seeded multivariate normal/t samplers and a
//! Monte-Carlo harness that aggregates per-iteration estimates and
//! D-efficiencies.

pub mod comparators;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod sampling;
pub mod simulation;

pub use error::{Error, Result};
pub use estimators::{
    d_efficiency, iterate, iterate_with, l_step, mean_state, ranks_of, reduced_invariant, TIE_TOL,
    EstimatorState, Initializer, IterateOptions, IterationFailure, IterationTrace, Sample,
    WeightScheme,
};
pub use linalg::{Matrix, SpdFactorization};
pub use sampling::{DistributionKind, DistributionSpec, Sampler};
pub use simulation::{run_simulation, SimulationConfig, SimulationSummary};
