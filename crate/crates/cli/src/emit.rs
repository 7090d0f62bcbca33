//! Writing reports, tables and density snapshots to disk.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use noisecalc_core::fokker_planck::{svg_curves, svg_heatmap, to_csv, DensityGrid};

use crate::error::{HarnessError, Result};
use crate::report::{Outcome, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::Json, OutputFormat::Csv, OutputFormat::Svg];
}

/// Writes the requested formats into `dir` and returns the files written, in
/// a fixed order. `report.json` holds metrics and verdicts; tables and
/// densities become `*.csv`; convergence tables and densities become `*.svg`.
pub fn emit_outputs(outcome: &Outcome, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files: Vec<(String, String)> = Vec::new();
    if formats.contains(&OutputFormat::Json) {
        files.push(("report.json".into(), outcome.report.to_json()));
    }
    if formats.contains(&OutputFormat::Csv) {
        for (name, table) in &outcome.tables {
            files.push((format!("{name}.csv"), table.to_csv()));
        }
        for (name, grid) in &outcome.densities {
            files.push((format!("density_{name}.csv"), to_csv(grid)));
        }
    }
    if formats.contains(&OutputFormat::Svg) {
        for (name, table) in &outcome.tables {
            if let Some(svg) = loglog_svg(name, table) {
                files.push((format!("{name}.svg"), svg));
            }
        }
        files.extend(density_svgs(outcome)?);
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn density_svgs(outcome: &Outcome) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let one_d: Vec<(&str, &DensityGrid)> =
        outcome.densities.iter().filter(|(_, g)| g.dim() == 1).map(|(n, g)| (n.as_str(), g)).collect();
    if let Some((_, first)) = one_d.first() {
        if one_d.iter().all(|(_, g)| g.same_grid(first)) {
            out.push(("densities.svg".to_string(), svg_curves(&one_d)?));
        } else {
            for (name, g) in &one_d {
                out.push((format!("density_{name}.svg"), svg_curves(&[(name, g)])?));
            }
        }
    }
    for (name, g) in outcome.densities.iter().filter(|(_, g)| g.dim() == 2) {
        out.push((format!("density_{name}.svg"), svg_heatmap(g, name)?));
    }
    Ok(out)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log chart of every other column against the table's x column; rows
/// with non-positive entries are skipped per series.
fn loglog_svg(title: &str, table: &Table) -> Option<String> {
    let xc = table.loglog_x?;
    let series: Vec<(usize, Vec<(f64, f64)>)> = (0..table.columns.len())
        .filter(|c| *c != xc)
        .map(|c| {
            let pts = table
                .rows
                .iter()
                .filter(|r| r[xc] > 0.0 && r[c] > 0.0 && r[xc].is_finite() && r[c].is_finite())
                .map(|r| (r[xc].log10(), r[c].log10()))
                .collect();
            (c, pts)
        })
        .filter(|(_, p): &(usize, Vec<(f64, f64)>)| !p.is_empty())
        .collect();
    if series.is_empty() {
        return None;
    }
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="10" y="20" font-family="sans-serif" font-size="13">{}</text>"#, escape(title));
    let _ = writeln!(
        out,
        r##"<path d="M{pad} {b} H{r} M{pad} {b} V{pad}" stroke="#444" fill="none"/>"##,
        b = h - pad,
        r = w - pad
    );
    let _ = writeln!(
        out,
        r#"<text x="{pad}" y="{}" font-family="sans-serif" font-size="11">log10 {}: [{x0:.3}, {x1:.3}]; log10 value: [{y0:.3}, {y1:.3}]</text>"#,
        h - 15.0,
        escape(&table.columns[xc])
    );
    for (k, (c, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(*x), sy(*y));
        }
        let _ = writeln!(out, r#"<path d="{}" stroke="{colour}" stroke-width="1.5" fill="none"/>"#, d.trim_end());
        for (x, y) in pts {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, sx(*x), sy(*y));
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{colour}">{}</text>"#,
            w - 220.0,
            pad + 16.0 * (k as f64 + 1.0),
            escape(&table.columns[*c])
        );
    }
    out.push_str("</svg>\n");
    Some(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LoadedConfig;
    use crate::report::ExperimentReport;
    use noisecalc_core::fokker_planck::GridAxis;

    fn outcome() -> Outcome {
        let cfg = LoadedConfig::parse(
            "experiment = \"scaledbm\"\nmaster_seed = 1\n[scaledbm]\nlevel = 4\ninterpretations = [0.0]\nmodel = { name = \"scaled_bm\" }\n",
        )
        .unwrap();
        let mut o = Outcome::new(ExperimentReport::new("scaledbm", &cfg));
        let mut t = Table::new(["n", "error"]).with_loglog(0);
        t.push(vec![16.0, 0.25]);
        t.push(vec![64.0, 0.125]);
        o.tables.insert("convergence".into(), t);
        let ax = GridAxis::symmetric(2.0, 8).unwrap();
        o.densities.insert("pde".into(), DensityGrid::gaussian(vec![ax], &[0.0], 0.5).unwrap());
        o.densities.insert("pde2d".into(), DensityGrid::gaussian(vec![ax, ax], &[0.0, 0.0], 0.5).unwrap());
        o
    }

    #[test]
    fn writes_every_format() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_outputs(&outcome(), dir.path(), &OutputFormat::ALL).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(
            names,
            [
                "report.json",
                "convergence.csv",
                "density_pde.csv",
                "density_pde2d.csv",
                "convergence.svg",
                "densities.svg",
                "density_pde2d.svg"
            ]
        );
        let csv = std::fs::read_to_string(dir.path().join("density_pde2d.csv")).unwrap();
        assert!(csv.starts_with("x,y,u\n"));
        let heat = std::fs::read_to_string(dir.path().join("density_pde2d.svg")).unwrap();
        assert!(heat.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn json_only_and_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let o = outcome();
        let a = emit_outputs(&o, dir.path(), &[OutputFormat::Json]).unwrap();
        let first = std::fs::read(&a[0]).unwrap();
        emit_outputs(&o, dir.path(), &[OutputFormat::Json]).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(first, std::fs::read(&a[0]).unwrap());
    }

    #[test]
    fn loglog_skips_nonpositive_values() {
        let mut t = Table::new(["n", "e"]).with_loglog(0);
        t.push(vec![1.0, 0.0]);
        assert!(loglog_svg("t", &t).is_none());
        t.push(vec![2.0, 1.0]);
        assert!(loglog_svg("t", &t).unwrap().contains("<circle"));
        assert!(loglog_svg("t", &Table::new(["n", "e"])).is_none());
    }
}
