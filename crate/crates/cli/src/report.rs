//! Experiment reports: metrics, threshold checks and provenance.

use std::collections::BTreeMap;
use std::{fmt, io};

use noisecalc_core::fokker_planck::DensityGrid;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::LoadedConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    /// Closed interval `[threshold, upper]`.
    #[serde(rename = "in")]
    Within,
}

/// One metric compared with one threshold (or interval).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub metric: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn new(metric: impl Into<String>, value: f64, comparison: Comparison, threshold: f64, upper: Option<f64>) -> Self {
        let passed = match comparison {
            Comparison::Lt => value < threshold,
            Comparison::Le => value <= threshold,
            Comparison::Gt => value > threshold,
            Comparison::Ge => value >= threshold,
            Comparison::Within => upper.is_some_and(|u| value >= threshold && value <= u),
        };
        Self { metric: metric.into(), value, comparison, threshold, upper, passed }
    }

    pub fn lt(metric: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(metric, value, Comparison::Lt, threshold, None)
    }

    pub fn le(metric: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(metric, value, Comparison::Le, threshold, None)
    }

    pub fn gt(metric: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(metric, value, Comparison::Gt, threshold, None)
    }

    pub fn ge(metric: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(metric, value, Comparison::Ge, threshold, None)
    }

    pub fn within(metric: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(metric, value, Comparison::Within, lo, Some(hi))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "ok" } else { "FAILED" };
        match self.upper {
            Some(hi) => {
                write!(f, "{} = {:.6e} in [{:.6e}, {:.6e}] {mark}", self.metric, self.value, self.threshold, hi)
            }
            None => {
                let op = match self.comparison {
                    Comparison::Lt => "<",
                    Comparison::Le => "<=",
                    Comparison::Gt => ">",
                    Comparison::Ge => ">=",
                    Comparison::Within => "in",
                };
                write!(f, "{} = {:.6e} {op} {:.6e} {mark}", self.metric, self.value, self.threshold)
            }
        }
    }
}

/// All checks registered under one criterion name.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub provenance: Provenance,
    pub thresholds: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, String>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, config: &LoadedConfig) -> Self {
        Self {
            experiment: experiment.into(),
            provenance: Provenance {
                config_hash: config.hash(),
                master_seed: config.config.master_seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            thresholds: config.config.thresholds.clone(),
            metrics: BTreeMap::new(),
            notes: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            passed: false,
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn note(&mut self, name: impl Into<String>, text: impl Into<String>) {
        self.notes.insert(name.into(), text.into());
    }

    /// Records the check's value as a metric and files it under `criterion`.
    pub fn check(&mut self, criterion: &str, check: Check) {
        self.metrics.insert(check.metric.clone(), check.value);
        let v = self.verdicts.entry(criterion.to_string()).or_default();
        v.checks.push(check);
        v.passed = v.checks.iter().all(|c| c.passed);
        self.passed = self.verdicts.values().all(|v| v.passed);
    }

    pub fn verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.get(criterion)
    }

    /// Pretty JSON with every float written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats::default());
        self.serialize(&mut ser).expect("report serializes");
        out.push(b'\n');
        String::from_utf8(out).expect("JSON is UTF-8")
    }
}

/// Numeric table with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Column plotted on the horizontal axis of a log-log chart, if any.
    pub loglog_x: Option<usize>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new(), loglog_x: None }
    }

    pub fn with_loglog(mut self, x_column: usize) -> Self {
        self.loglog_x = Some(x_column);
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header plus rows, floats with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fixed(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn fixed(v: f64) -> String {
    format!("{v:.16e}")
}

/// A report plus the artifacts it summarises.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub tables: BTreeMap<String, Table>,
    pub densities: BTreeMap<String, DensityGrid>,
}

impl Outcome {
    pub fn new(report: ExperimentReport) -> Self {
        Self { report, tables: BTreeMap::new(), densities: BTreeMap::new() }
    }
}

/// Pretty printing with fixed-precision floats.
#[derive(Default)]
struct FixedFloats<'a> {
    pretty: PrettyFormatter<'a>,
}

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fixed(value).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> ExperimentReport {
        let cfg = LoadedConfig::parse(
            "experiment = \"scaledbm\"\nmaster_seed = 1\n[scaledbm]\nlevel = 4\ninterpretations = [0.0]\nmodel = { name = \"scaled_bm\" }\n[thresholds]\nb = 2.0\na = 1.0\n",
        )
        .unwrap();
        ExperimentReport::new("scaledbm", &cfg)
    }

    #[test]
    fn checks_compare_as_named() {
        assert!(Check::lt("m", 1.0, 2.0).passed && !Check::lt("m", 2.0, 2.0).passed);
        assert!(Check::le("m", 2.0, 2.0).passed);
        assert!(Check::gt("m", 3.0, 2.0).passed && !Check::gt("m", f64::NAN, 2.0).passed);
        assert!(Check::ge("m", 2.0, 2.0).passed);
        assert!(Check::within("m", -0.5, -0.65, -0.35).passed && !Check::within("m", -0.3, -0.65, -0.35).passed);
    }

    #[test]
    fn verdicts_aggregate() {
        let mut r = report();
        r.check("one", Check::le("x", 1.0, 2.0));
        assert!(r.passed);
        r.check("two", Check::le("y", 3.0, 2.0));
        assert!(!r.passed && r.verdict("one").unwrap().passed && !r.verdict("two").unwrap().passed);
        assert_eq!(r.metrics["y"], 3.0);
    }

    #[test]
    fn json_uses_fixed_precision_and_sorted_keys() {
        let mut r = report();
        r.metric("zeta", 0.1);
        r.metric("alpha", 1.0 / 3.0);
        r.metric("bad", f64::NAN);
        let j = r.to_json();
        assert!(j.contains("\"alpha\": 3.3333333333333331e-1"));
        assert!(j.contains("\"zeta\": 1.0000000000000001e-1"));
        assert!(j.contains("\"bad\": null"));
        assert!(j.find("\"a\"").unwrap() < j.find("\"b\"").unwrap());
        assert!(j.find("\"alpha\"").unwrap() < j.find("\"zeta\"").unwrap());
        let parsed: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(parsed["metrics"]["alpha"].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(j, r.to_json());
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new(["n", "err"]);
        t.push(vec![256.0, 0.5]);
        assert_eq!(t.to_csv(), "n,err\n2.5600000000000000e2,5.0000000000000000e-1\n");
    }
}
