use thiserror::Error;

use crate::fokker_planck::PdeError;
use crate::model_zoo::ModelError;
use crate::sde_engine::SdeError;
use crate::stoch_integrals::IntegralError;
use crate::tensor_field::TensorError;

/// Umbrella error for callers that drive several modules at once.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    Pde(#[from] PdeError),
}

pub type Result<T> = std::result::Result<T, Error>;
