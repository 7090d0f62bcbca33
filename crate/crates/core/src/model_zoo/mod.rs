//! Constructors for the diffusion models studied by the toolkit.
//!
//! Tensor-field models come in two groups: families satisfying the structural
//! condition `∇·D = 2σ∇·σᵀ` (constant, isotropic, diagonal, rotated,
//! oriented, scalar-modulated and radial tensors) and two-dimensional
//! cross-coupled families that violate it. Scalar SDEs cover heterogeneous
//! diffusion `dX = k|X|^α ξ(t)`, the kinetic energy of a Brownian velocity and
//! scaled Brownian motion. Every constructor validates its hypotheses.

mod fields;
mod registry;
mod scalar;
mod scaled_bm;
mod tensor;

use thiserror::Error;

use crate::tensor_field::TensorError;

pub use fields::{RadialProfile, ScalarField};
pub use registry::{BuiltModel, ModelSpec, ParamValue, REGISTERED_MODELS};
pub use scalar::{
    kinetic_energy_fehlberg_drift, make_het_diffusion, make_het_diffusion_noise_only, make_kinetic_energy,
    make_kinetic_energy_fehlberg, Barrier, BarrierKind, ClosedForm, ScalarFn, ScalarSdeSpec, STUDIED_EXPONENTS,
};
pub use scaled_bm::{exponential, linear, make_scaled_bm, power_law, ScaledBmSpec};
pub use tensor::{
    coupling_field, make_negative_case, make_positive_case, make_radial_case, negative_case_lambda, separable_profile,
    CouplingFamily, FamilyShape, NegativeCase, PositiveCase, DEFAULT_HALF_WIDTH,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter '{param}' violates its constraint: {message}")]
    ParamViolation { param: String, message: String },
    #[error("missing parameter '{0}'")]
    MissingParam(String),
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("initial value outside the domain: {0}")]
    DomainViolation(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl ModelError {
    pub fn param(param: &str, message: impl Into<String>) -> Self {
        ModelError::ParamViolation { param: param.into(), message: message.into() }
    }
}

#[cfg(test)]
mod tests;
