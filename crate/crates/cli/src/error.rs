use std::path::PathBuf;

use noisecalc_core::fokker_planck::PdeError;
use noisecalc_core::model_zoo::ModelError;
use noisecalc_core::sde_engine::SdeError;
use noisecalc_core::stoch_integrals::IntegralError;
use noisecalc_core::tensor_field::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("config does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("missing threshold '{0}' in [thresholds]")]
    MissingThreshold(String),
    #[error("experiment '{experiment}' needs a [{experiment}] section")]
    MissingSection { experiment: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] noisecalc_core::Error),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

macro_rules! via_core {
    ($($t:ty),*) => {
        $(impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                HarnessError::Core(e.into())
            }
        })*
    };
}

via_core!(TensorError, ModelError, IntegralError, SdeError, PdeError);

pub type Result<T> = std::result::Result<T, HarnessError>;
