//! Named experiments. Each one reads its section of the config, computes
//! metrics and files them as threshold checks in an [`ExperimentReport`].
//!
//! [`ExperimentReport`]: crate::report::ExperimentReport

mod audit;
mod density;
mod hetdiff;
mod integrals;
mod scaledbm;

use noisecalc_core::rng::mix;
use noisecalc_core::tensor_field::TensorFieldModel;

use crate::config::{ExperimentKind, LoadedConfig, ModelConfig};
use crate::error::Result;
use crate::report::Outcome;

pub use audit::run_structural_audit;
pub use density::run_density_crossval;
pub use hetdiff::run_het_diffusion_suite;
pub use integrals::run_integral_convergence;
pub use scaledbm::run_scaled_bm;

/// Dispatches on the config's experiment name.
pub fn run_experiment(config: &LoadedConfig) -> Result<Outcome> {
    match config.config.experiment {
        ExperimentKind::Audit => run_structural_audit(config),
        ExperimentKind::Density => run_density_crossval(config),
        ExperimentKind::Integrals => run_integral_convergence(config),
        ExperimentKind::Hetdiff => run_het_diffusion_suite(config),
        ExperimentKind::Scaledbm => run_scaled_bm(config),
    }
}

fn tensor_model(m: &ModelConfig) -> Result<TensorFieldModel> {
    Ok(m.to_spec()?.build()?.into_tensor()?)
}

/// Seed of the `index`-th independent replicate under `master`.
fn replicate_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix(mix(master, stream), index)
}

fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
