//! Euler-Maruyama simulation of SDEs under any noise interpretation.
//!
//! A model read at the λ-point is simulated through its Itô equivalent with
//! drift `b + λ(∇σ:σᵀ)`, so one forward-Euler stepper serves every reading.
//! Guards record blow-up and absorption as path outcomes. Closed-form
//! solutions of the scalar models are evaluated on the same Brownian driver
//! to give pathwise oracles.

mod analytic;
mod ensemble;
mod path;
mod sde;
mod stepper;

use thiserror::Error;

use crate::model_zoo::ModelError;
use crate::stoch_integrals::IntegralError;
use crate::tensor_field::TensorError;

pub use analytic::analytic_path;
pub use ensemble::{ensemble_member, isotropic_gaussian, point_mass, simulate_ensemble, EnsembleResult, StatusTally};
pub use path::{PathStatus, SamplePath};
pub use sde::{interpretation_to_ito, DiffusionModel, EffectiveItoSde, Workspace};
pub use stepper::{euler_maruyama, euler_maruyama_with_increments, Floor, FloorMode, Guards, BLOW_UP_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("initial value outside the domain: {0}")]
    DomainViolation(String),
    #[error("alive path holds a non-finite state")]
    NonFiniteState,
    #[error("ensemble needs at least one path")]
    EmptyEnsemble,
    #[error("model '{0}' has no closed-form solution")]
    MissingClosedForm(String),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Integral(#[from] IntegralError),
}
