use std::fmt::Write as _;

use super::grid::DensityGrid;
use super::PdeError;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One row per cell: centre coordinates, then the clipped value, all with
/// 17 significant digits.
pub fn to_csv(grid: &DensityGrid) -> String {
    let header = if grid.dim() == 1 { "x,u" } else { "x,y,u" };
    let mut out = String::with_capacity(grid.len() * 32 + 8);
    out.push_str(header);
    out.push('\n');
    let mut x = vec![0.0; grid.dim()];
    for (c, v) in grid.values().iter().enumerate() {
        grid.center_into(c, &mut x);
        for xi in &x {
            let _ = write!(out, "{xi:.16e},");
        }
        let _ = writeln!(out, "{:.16e}", v.max(0.0));
    }
    out
}

/// Overlaid 1-D curves with a legend.
pub fn svg_curves(series: &[(&str, &DensityGrid)]) -> Result<String, PdeError> {
    let Some((_, first)) = series.first() else {
        return Err(PdeError::GridMismatch);
    };
    if first.dim() != 1 || series.iter().any(|(_, g)| !g.same_grid(first)) {
        return Err(PdeError::GridMismatch);
    }
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let axis = first.axes()[0];
    let vmax = series.iter().flat_map(|(_, g)| g.values().iter().copied()).fold(0.0_f64, f64::max).max(1e-300);
    let sx = |x: f64| pad + (x - axis.lo) / (axis.hi - axis.lo) * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - v.max(0.0) / vmax * (h - 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r##"<path d="M{pad} {y0} H{x1} M{pad} {y0} V{pad}" stroke="#444" fill="none"/>"##,
        y0 = h - pad,
        x1 = w - pad
    );
    for (k, (label, g)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        for (i, v) in g.values().iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(axis.center(i)), sy(*v));
        }
        let _ = writeln!(out, r#"<path d="{}" stroke="{colour}" stroke-width="1.5" fill="none"/>"#, d.trim_end());
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{colour}">{}</text>"#,
            w - 200.0,
            pad + 16.0 * (k as f64 + 1.0),
            escape(label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{pad}" y="{}" font-family="sans-serif" font-size="11">x in [{}, {}], max u = {vmax:.4}</text>"#,
        h - 12.0,
        axis.lo,
        axis.hi
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Greyscale-to-blue heatmap of a 2-D grid, first axis horizontal.
pub fn svg_heatmap(grid: &DensityGrid, title: &str) -> Result<String, PdeError> {
    if grid.dim() != 2 {
        return Err(PdeError::GridMismatch);
    }
    let (nx, ny) = (grid.axes()[0].cells, grid.axes()[1].cells);
    let cell = (480.0 / nx.max(ny) as f64).max(1.0);
    let (w, h) = (cell * nx as f64 + 20.0, cell * ny as f64 + 40.0);
    let vmax = grid.values().iter().copied().fold(0.0_f64, f64::max).max(1e-300);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="10" y="20" font-family="sans-serif" font-size="13">{}</text>"#, escape(title));
    for i in 0..nx {
        for j in 0..ny {
            let v = grid.values()[i * ny + j].max(0.0) / vmax;
            let shade = (255.0 * (1.0 - v)).round() as u8;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb({shade},{shade},255)"/>"#,
                10.0 + cell * i as f64,
                30.0 + cell * (ny - 1 - j) as f64
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
