use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use noisecalc_cli::config::{ConfigBuilder, ExperimentKind, LoadedConfig};
use noisecalc_cli::golden::{default_config, golden_text, GOLDEN_CONFIGS};
use noisecalc_cli::{emit_outputs, run_experiment, HarnessError, OutputFormat, Result};
use noisecalc_core::model_zoo::REGISTERED_MODELS;

/// Numerical experiments on noise interpretations, structural conditions and
/// density equations.
#[derive(Parser, Debug)]
#[command(name = "noisecalc", version)]
struct Cli {
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's output_dir, else out/<config>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config file to run instead of the shipped default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides a config key, e.g. --set density.paths=20000. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output formats, comma separated.
    #[arg(long, global = true, value_delimiter = ',', default_values = ["json", "csv", "svg"])]
    format: Vec<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Shipped config to run (see list-configs).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structural-condition audit and Sylvester derivative checks.
    Audit(RunArgs),
    /// PDE form equivalence and Monte Carlo density cross-validation.
    Density(RunArgs),
    /// Convergence of stochastic-integral discretisations.
    Integrals {
        /// lambda_family, fehlberg, hk_conversion, deterministic or ho_divergence.
        #[arg(long)]
        subtype: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Heterogeneous diffusion: strong error, blow-up, absorption, domain.
    Hetdiff(RunArgs),
    /// Scaled Brownian motion read at several interpretations.
    Scaledbm(RunArgs),
    /// Lists the registered models.
    ListModels,
    /// Lists the shipped configs.
    ListConfigs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Runs the command; `Ok(false)` when any verdict fails.
fn execute(cli: Cli) -> Result<bool> {
    let (kind, run, subtype) = match &cli.command {
        Command::ListModels => {
            for (name, description) in REGISTERED_MODELS {
                println!("{name:<26} {description}");
            }
            return Ok(true);
        }
        Command::ListConfigs => {
            for (name, text) in GOLDEN_CONFIGS {
                let experiment = LoadedConfig::parse(text)?.config.experiment;
                println!("{name:<22} {}", experiment.name());
            }
            return Ok(true);
        }
        Command::Audit(r) => (ExperimentKind::Audit, r, None),
        Command::Density(r) => (ExperimentKind::Density, r, None),
        Command::Integrals { subtype, run } => (ExperimentKind::Integrals, run, subtype.as_deref()),
        Command::Hetdiff(r) => (ExperimentKind::Hetdiff, r, None),
        Command::Scaledbm(r) => (ExperimentKind::Scaledbm, r, None),
    };

    let (source, mut builder) = match (&cli.config, &run.preset) {
        (Some(_), Some(_)) => return Err(HarnessError::Config("--config and --preset are exclusive".into())),
        (Some(path), None) => {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| kind.name().into());
            (stem, ConfigBuilder::from_path(path)?)
        }
        (None, preset) => {
            let name = preset.as_deref().or(subtype).unwrap_or_else(|| default_config(kind));
            (name.to_string(), LoadedConfig::builder(golden_text(name)?)?)
        }
    };
    if let (Some(sub), Some(_)) = (subtype, &cli.config) {
        builder = builder.set("integrals.subtype", &format!("\"{sub}\""))?;
    }
    for assignment in &cli.overrides {
        builder = builder.set_assignment(assignment)?;
    }
    if let Some(seed) = cli.seed {
        builder = builder.seed(seed);
    }
    if let Some(out) = &cli.out {
        builder = builder.output_dir(out);
    }
    let config = builder.build()?;
    if config.config.experiment != kind {
        return Err(HarnessError::Config(format!(
            "config '{source}' runs experiment '{}', not '{}'",
            config.config.experiment.name(),
            kind.name()
        )));
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    }

    let started = Instant::now();
    let outcome = run_experiment(&config)?;
    eprintln!("{source}: finished in {:.2} s", started.elapsed().as_secs_f64());
    let dir = config.config.output_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&source));
    let files = emit_outputs(&outcome, &dir, &cli.format)?;
    for (criterion, verdict) in &outcome.report.verdicts {
        println!("{} {criterion}", if verdict.passed { "PASS" } else { "FAIL" });
        for c in &verdict.checks {
            println!("    {c}");
        }
    }
    eprintln!("wrote {} files to {}", files.len(), dir.display());
    Ok(outcome.report.passed)
}
