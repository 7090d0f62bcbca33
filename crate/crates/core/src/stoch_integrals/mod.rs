//! λ-point stochastic integrals on reproducible Brownian paths.
//!
//! The evaluation point of each Riemann-sum term is `t* = t_{j-1} + λΔt`:
//! λ = 0 gives Itô, ½ Stratonovich, 255/512 Fehlberg and 1 the kinetic
//! (Hänggi-Klimontovich) sum. Everything is evaluated on a [`BrownianPath`],
//! so nested partitions of one seed see one realisation.

mod brownian;
mod hk;
mod ho;
mod partition;
mod sums;

use thiserror::Error;

pub use brownian::{BrownianPath, BrownianSource, LEAF_LEVEL};
pub use hk::{conversion_residual, hk_integral_multi, ito_integral_multi, Integrator};
pub use ho::{ho_discretization_sum, HoOutcome, HO_OVERFLOW_THRESHOLD};
pub use partition::{InterpretationTag, Partition};
pub use sums::{
    by_parts_residual, deterministic_lambda_integral, fehlberg_conversion_rhs, fehlberg_integral, fehlberg_residual,
    identity_integral_limit, lambda_riemann_sum,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegralError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("interpretation parameter must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Brownian values requested at invalid time {0}")]
    NegativeTime(f64),
    #[error("integrand path and driver are sampled on different partitions")]
    PartitionMismatch,
}
