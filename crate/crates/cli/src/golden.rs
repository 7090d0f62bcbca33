//! Configs shipped with the harness, one per acceptance check.

use crate::config::{ExperimentKind, LoadedConfig};
use crate::error::{HarnessError, Result};

macro_rules! golden {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../configs/", $name, ".toml")))),*]
    };
}

/// `(name, TOML text)` of every shipped config.
pub const GOLDEN_CONFIGS: &[(&str, &str)] = golden![
    "structural_audit",
    "sylvester",
    "form_equivalence_1d",
    "form_equivalence_2d",
    "density_positive_1d",
    "density_positive_2d",
    "density_negative",
    "lambda_family",
    "fehlberg",
    "ho_divergence",
    "hk_conversion",
    "deterministic",
    "het_diffusion",
    "scaled_bm",
];

pub fn golden_text(name: &str) -> Result<&'static str> {
    GOLDEN_CONFIGS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| HarnessError::Config(format!("no shipped config named '{name}'")))
}

/// The shipped config run when a subcommand is given no `--config`.
pub fn default_config(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Audit => "structural_audit",
        ExperimentKind::Density => "density_positive_1d",
        ExperimentKind::Integrals => "lambda_family",
        ExperimentKind::Hetdiff => "het_diffusion",
        ExperimentKind::Scaledbm => "scaled_bm",
    }
}

pub fn load_golden(name: &str) -> Result<LoadedConfig> {
    LoadedConfig::parse(golden_text(name)?)
}
