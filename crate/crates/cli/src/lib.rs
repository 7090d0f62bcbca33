//! Experiment driver for noisecalc: declarative configs, named experiments
//! with threshold verdicts, and deterministic JSON, CSV and SVG output.

pub mod config;
pub mod emit;
pub mod error;
pub mod experiments;
pub mod golden;
pub mod report;

pub use config::{ConfigBuilder, ExperimentConfig, ExperimentKind, LoadedConfig};
pub use emit::{emit_outputs, OutputFormat};
pub use error::{HarnessError, Result};
pub use experiments::{
    run_density_crossval, run_experiment, run_het_diffusion_suite, run_integral_convergence, run_scaled_bm,
    run_structural_audit,
};
pub use golden::{default_config, load_golden, GOLDEN_CONFIGS};
pub use report::{Check, ExperimentReport, Outcome, Table};
