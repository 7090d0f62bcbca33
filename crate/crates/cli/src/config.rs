//! Declarative experiment configuration.
//!
//! A config is a TOML document with a top-level `experiment` name, a
//! `master_seed`, one settings section named after the experiment and a
//! `[thresholds]` table. Command-line overrides are applied to the raw
//! document before it is typed, so every key can be overridden.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use noisecalc_core::model_zoo::{ModelSpec, ParamValue};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Audit,
    Density,
    Integrals,
    Hetdiff,
    Scaledbm,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Audit,
        ExperimentKind::Density,
        ExperimentKind::Integrals,
        ExperimentKind::Hetdiff,
        ExperimentKind::Scaledbm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Audit => "audit",
            ExperimentKind::Density => "density",
            ExperimentKind::Integrals => "integrals",
            ExperimentKind::Hetdiff => "hetdiff",
            ExperimentKind::Scaledbm => "scaledbm",
        }
    }
}

/// Registered model name with its parameter table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub params: toml::Table,
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let mut spec = ModelSpec::new(&self.name);
        for (key, value) in &self.params {
            spec = spec.with(key.clone(), param_value(key, value)?);
        }
        Ok(spec)
    }
}

fn number(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(HarnessError::Config(format!("model parameter '{key}' must be numeric"))),
    }
}

fn param_value(key: &str, v: &toml::Value) -> Result<ParamValue> {
    match v {
        toml::Value::String(s) => Ok(ParamValue::Text(s.clone())),
        toml::Value::Array(items) if items.iter().all(|i| i.is_array()) => items
            .iter()
            .map(|row| row.as_array().unwrap().iter().map(|x| number(key, x)).collect())
            .collect::<Result<_>>()
            .map(ParamValue::Matrix),
        toml::Value::Array(items) => {
            items.iter().map(|x| number(key, x)).collect::<Result<_>>().map(ParamValue::Vector)
        }
        other => number(key, other).map(ParamValue::Number),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Holds,
    Fails,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditCase {
    pub label: String,
    pub expect: Expectation,
    /// Reference value for the grid maximum of `‖Λ‖` when the condition fails.
    #[serde(default)]
    pub expected_max: Option<f64>,
    pub model: ModelConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SylvesterSettings {
    pub instances: usize,
    pub dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSettings {
    /// Half-width `L` of the audit box.
    pub half_width: f64,
    /// Grid points per axis.
    pub resolution: usize,
    #[serde(default)]
    pub check_bounds: bool,
    #[serde(default)]
    pub cases: Vec<AuditCase>,
    #[serde(default)]
    pub sylvester: Option<SylvesterSettings>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    FormEquivalence,
    Crossval,
}

/// Drift handed to the simulated equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftChoice {
    /// The model drift `b`.
    Raw,
    /// `b + ½∇·D`.
    HalfDivergence,
}

/// PDE solution an ensemble histogram is compared with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeReference {
    /// Fick form with drift `b`.
    Fick,
    /// Standard form with drift `b + ½∇·D`.
    ItoStandard,
    /// Standard form with drift `b + ∇σ:σᵀ`.
    ItoKinetic,
}

impl PdeReference {
    pub fn name(self) -> &'static str {
        match self {
            PdeReference::Fick => "fick",
            PdeReference::ItoStandard => "ito_standard",
            PdeReference::ItoKinetic => "ito_kinetic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationRun {
    pub label: String,
    pub interpretation: f64,
    pub drift: DriftChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityCheck {
    /// The run's histogram agrees with the reference within sampling error.
    Match { run: String, reference: PdeReference },
    /// `L1(run, far) ≥ ratio × L1(run, near)` and the near term matches.
    Separation { run: String, far: PdeReference, near: PdeReference },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySettings {
    pub mode: DensityMode,
    pub model: ModelConfig,
    /// Final time `T`.
    pub horizon: f64,
    /// Domain half-width `L`.
    pub half_width: f64,
    /// Cells per axis.
    pub resolution: usize,
    /// Standard deviation `s` of the Gaussian initial law.
    pub initial_spread: f64,
    #[serde(default)]
    pub initial_mean: Option<Vec<f64>>,
    /// Grid doublings in the refinement study.
    #[serde(default = "default_refinements")]
    pub refinements: usize,
    /// Ensemble size `N`.
    #[serde(default)]
    pub paths: Option<usize>,
    /// Euler-Maruyama step.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_shards")]
    pub shards: usize,
    #[serde(default)]
    pub runs: Vec<SimulationRun>,
    #[serde(default)]
    pub checks: Vec<DensityCheck>,
}

fn default_refinements() -> usize {
    2
}

fn default_shards() -> usize {
    10
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralKind {
    LambdaFamily,
    Fehlberg,
    HkConversion,
    Deterministic,
    HoDivergence,
}

impl IntegralKind {
    pub fn name(self) -> &'static str {
        match self {
            IntegralKind::LambdaFamily => "lambda_family",
            IntegralKind::Fehlberg => "fehlberg",
            IntegralKind::HkConversion => "hk_conversion",
            IntegralKind::Deterministic => "deterministic",
            IntegralKind::HoDivergence => "ho_divergence",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralSettings {
    pub subtype: IntegralKind,
    pub seeds: usize,
    /// Dyadic levels: `n = 2^level` intervals.
    pub levels: Vec<u32>,
    #[serde(default)]
    pub interpretations: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub model: Option<ModelConfig>,
}

fn default_horizon() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongErrorSettings {
    pub alpha: f64,
    pub k: f64,
    pub x0: f64,
    pub seeds: usize,
    pub levels: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HittingSettings {
    pub alpha: f64,
    pub k: f64,
    pub x0: f64,
    pub paths: usize,
    pub level: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSettings {
    pub alpha: f64,
    pub k: f64,
    pub x0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HetDiffSettings {
    pub horizon: f64,
    #[serde(default)]
    pub strong_error: Option<StrongErrorSettings>,
    #[serde(default)]
    pub blow_up: Option<HittingSettings>,
    #[serde(default)]
    pub absorption: Option<HittingSettings>,
    #[serde(default)]
    pub domain: Option<DomainSettings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledBmSettings {
    pub model: ModelConfig,
    pub level: u32,
    pub interpretations: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub audit: Option<AuditSettings>,
    #[serde(default)]
    pub density: Option<DensitySettings>,
    #[serde(default)]
    pub integrals: Option<IntegralSettings>,
    #[serde(default)]
    pub hetdiff: Option<HetDiffSettings>,
    #[serde(default)]
    pub scaledbm: Option<ScaledBmSettings>,
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
}

/// Raw config document plus the typed view of it.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    raw: toml::Table,
    pub config: ExperimentConfig,
}

/// Keys that locate outputs and never influence results.
const UNHASHED_KEYS: [&str; 1] = ["output_dir"];

impl LoadedConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::builder(text)?.build()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::builder(&read(path)?)?.build()
    }

    /// Parses without typing, so overrides can be applied first.
    pub fn builder(text: &str) -> Result<ConfigBuilder> {
        Ok(ConfigBuilder { raw: text.parse::<toml::Table>()? })
    }

    pub fn raw(&self) -> &toml::Table {
        &self.raw
    }

    /// SHA-256 of the canonical (key-sorted) document without output location.
    pub fn hash(&self) -> String {
        let mut canonical = self.raw.clone();
        for k in UNHASHED_KEYS {
            canonical.remove(k);
        }
        let text = toml::to_string(&canonical).expect("a parsed table serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

/// A parsed document awaiting overrides.
#[derive(Clone, Debug)]
pub struct ConfigBuilder {
    raw: toml::Table,
}

impl ConfigBuilder {
    pub fn from_path(path: &Path) -> Result<Self> {
        LoadedConfig::builder(&read(path)?)
    }

    /// Sets a dotted key such as `density.paths` to a TOML literal; text that
    /// is not a valid literal is taken as a string.
    pub fn set(mut self, key: &str, literal: &str) -> Result<Self> {
        let value = parse_literal(literal);
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts
            .pop()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| HarnessError::Config(format!("empty key in '{key}'")))?;
        let mut table = &mut self.raw;
        for part in parts {
            let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| HarnessError::Config(format!("'{part}' in '{key}' is not a section")))?;
        }
        table.insert(last.to_string(), value);
        Ok(self)
    }

    /// Parses `key=value`.
    pub fn set_assignment(self, assignment: &str) -> Result<Self> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("override '{assignment}' is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.raw.insert("master_seed".into(), toml::Value::Integer(seed as i64));
        self
    }

    pub fn output_dir(mut self, dir: &Path) -> Self {
        self.raw.insert("output_dir".into(), toml::Value::String(dir.to_string_lossy().into_owned()));
        self
    }

    pub fn build(self) -> Result<LoadedConfig> {
        let config: ExperimentConfig = self.raw.clone().try_into()?;
        config.validate()?;
        Ok(LoadedConfig { raw: self.raw, config })
    }
}

fn parse_literal(literal: &str) -> toml::Value {
    format!("v = {literal}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(literal.to_string()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("'{name}' must be positive, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("'{name}' must be at least 1")))
    }
}

fn lambda_range(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        Some(l) => Err(HarnessError::Config(format!("'{name}' entries must lie in [0, 1], got {l}"))),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn threshold(&self, name: &str) -> Result<f64> {
        self.thresholds.get(name).copied().ok_or_else(|| HarnessError::MissingThreshold(name.into()))
    }

    fn section<'a, T>(&self, s: &'a Option<T>) -> Result<&'a T> {
        s.as_ref().ok_or_else(|| HarnessError::MissingSection { experiment: self.experiment.name().into() })
    }

    pub fn audit(&self) -> Result<&AuditSettings> {
        self.section(&self.audit)
    }

    pub fn density(&self) -> Result<&DensitySettings> {
        self.section(&self.density)
    }

    pub fn integrals(&self) -> Result<&IntegralSettings> {
        self.section(&self.integrals)
    }

    pub fn hetdiff(&self) -> Result<&HetDiffSettings> {
        self.section(&self.hetdiff)
    }

    pub fn scaledbm(&self) -> Result<&ScaledBmSettings> {
        self.section(&self.scaledbm)
    }

    /// Checks the section for the selected experiment and the positivity of
    /// its numeric fields.
    pub fn validate(&self) -> Result<()> {
        match self.experiment {
            ExperimentKind::Audit => {
                let a = self.audit()?;
                positive("audit.half_width", a.half_width)?;
                nonzero("audit.resolution", a.resolution)?;
                if let Some(s) = &a.sylvester {
                    nonzero("audit.sylvester.instances", s.instances)?;
                    if s.dims.contains(&0) {
                        return Err(HarnessError::Config("'audit.sylvester.dims' entries must be at least 1".into()));
                    }
                }
            }
            ExperimentKind::Density => {
                let d = self.density()?;
                positive("density.horizon", d.horizon)?;
                positive("density.half_width", d.half_width)?;
                positive("density.initial_spread", d.initial_spread)?;
                nonzero("density.resolution", d.resolution)?;
                if d.mode == DensityMode::Crossval {
                    let paths = d.paths.ok_or_else(|| HarnessError::Config("'density.paths' is required".into()))?;
                    nonzero("density.paths", paths)?;
                    positive(
                        "density.dt",
                        d.dt.ok_or_else(|| HarnessError::Config("'density.dt' is required".into()))?,
                    )?;
                    if d.shards < 2 || paths < d.shards {
                        return Err(HarnessError::Config("'density.shards' must be in 2..=paths".into()));
                    }
                    lambda_range(
                        "density.runs.interpretation",
                        &d.runs.iter().map(|r| r.interpretation).collect::<Vec<_>>(),
                    )?;
                    for c in &d.checks {
                        let run = match c {
                            DensityCheck::Match { run, .. } | DensityCheck::Separation { run, .. } => run,
                        };
                        if !d.runs.iter().any(|r| &r.label == run) {
                            return Err(HarnessError::Config(format!("check refers to unknown run '{run}'")));
                        }
                    }
                }
            }
            ExperimentKind::Integrals => {
                let i = self.integrals()?;
                nonzero("integrals.seeds", i.seeds)?;
                positive("integrals.horizon", i.horizon)?;
                if i.levels.is_empty() || i.levels.iter().any(|l| *l > 24) {
                    return Err(HarnessError::Config("'integrals.levels' must be non-empty with entries <= 24".into()));
                }
                lambda_range("integrals.interpretations", &i.interpretations)?;
            }
            ExperimentKind::Hetdiff => {
                let h = self.hetdiff()?;
                positive("hetdiff.horizon", h.horizon)?;
                if let Some(s) = &h.strong_error {
                    positive("hetdiff.strong_error.k", s.k)?;
                    nonzero("hetdiff.strong_error.seeds", s.seeds)?;
                    if s.levels.len() < 2 {
                        return Err(HarnessError::Config(
                            "'hetdiff.strong_error.levels' needs two or more levels".into(),
                        ));
                    }
                }
                for (name, s) in [("blow_up", &h.blow_up), ("absorption", &h.absorption)] {
                    if let Some(s) = s {
                        positive(&format!("hetdiff.{name}.k"), s.k)?;
                        nonzero(&format!("hetdiff.{name}.paths"), s.paths)?;
                    }
                }
            }
            ExperimentKind::Scaledbm => {
                let s = self.scaledbm()?;
                if s.interpretations.is_empty() {
                    return Err(HarnessError::Config("'scaledbm.interpretations' must be non-empty".into()));
                }
                lambda_range("scaledbm.interpretations", &s.interpretations)?;
            }
        }
        Ok(())
    }
}
