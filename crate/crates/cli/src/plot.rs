//! Plot artifacts: two-column data files and a static SVG line chart.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use haffsim_core::dsmc::MomentSeries;

use crate::error::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Columns drawn for a series: everything except the clocks and `ncoll`.
pub fn curve_columns(series: &MomentSeries) -> Vec<String> {
    let header = series.header();
    header[2..header.len() - 1].to_vec()
}

/// `<stem>.<column>.dat` next to `svg`.
pub fn data_path(svg: &Path, column: &str) -> PathBuf {
    let stem = svg.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
    svg.with_file_name(format!("{stem}.{column}.dat"))
}

/// Writes one data file per curve and the chart; returns the paths written.
pub fn write_plots(series: &MomentSeries, svg: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let mut curves = Vec::new();
    for col in curve_columns(series) {
        let text = series.plot_data(&col).expect("column taken from header");
        let path = data_path(svg, &col);
        std::fs::write(&path, text)?;
        written.push(path);
        curves.push((col.clone(), series.column(&col).expect("column taken from header")));
    }
    std::fs::write(svg, svg_chart(&series.times(), &curves))?;
    written.push(svg.to_path_buf());
    Ok(written)
}

/// Log-log chart of each curve divided by its initial value, against `1 + t`.
pub fn svg_chart(t: &[f64], curves: &[(String, Vec<f64>)]) -> String {
    let xs: Vec<f64> = t.iter().map(|t| t.ln_1p()).collect();
    let normalized: Vec<(&str, Vec<Option<f64>>)> = curves
        .iter()
        .map(|(name, ys)| {
            let y0 = ys.first().copied().unwrap_or(f64::NAN);
            let pts = ys.iter().map(|y| Some((y / y0).ln()).filter(|v| v.is_finite())).collect();
            (name.as_str(), pts)
        })
        .collect();
    let (x_lo, x_hi) = bounds(xs.iter().copied());
    let (y_lo, y_hi) = bounds(normalized.iter().flat_map(|(_, p)| p.iter().flatten().copied()));
    let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">ln(1 + t)  [{x_lo:.3}, {x_hi:.3}]</text>"#, WIDTH / 2.0, HEIGHT - 20.0);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">ln(y / y(0))  [{y_lo:.3}, {y_hi:.3}]</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (k, (name, pts)) in normalized.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (x, y) in xs.iter().zip(pts) {
            match y {
                Some(y) => {
                    let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(*x), sy(*y));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        let ly = MARGIN + 16.0 + 16.0 * k as f64;
        let _ = writeln!(out, r#"<text x="{}" y="{ly}" font-size="12" fill="{color}">{name}</text>"#, WIDTH - MARGIN - 80.0);
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}
