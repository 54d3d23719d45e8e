//! Dependency-free SVG line plots of figure tables.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::output::load_csv;
use crate::experiments::CurvePoint;
use crate::scenario::Layout;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Axis labels for a figure id.
pub fn axis_labels(figure: &str) -> (&'static str, &'static str) {
    match figure {
        "fig2" => ("p_0 / P_max", "average P_D per node"),
        "fig3" => ("sigma_rcs^2 (dB)", "average P_D per node"),
        "fig4" => ("step / P_max", "value"),
        "fig6" | "fig10" => ("sigma_rcs^2 (dB)", "average detection probability"),
        "fig7" => ("P_max (dBm)", "average detection probability"),
        "fig8" | "fig11" => ("number of RAPs R", "average detection probability"),
        "fig9" => ("number of UEs K", "average detection probability"),
        "tradeoff" => ("sensing power share", "value"),
        _ => ("x", "y"),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_bounds(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Renders a table as an SVG document, one polyline per scheme/regime pair.
pub fn render_svg(points: &[CurvePoint]) -> String {
    let figure = points.first().map_or("", |p| p.figure.as_str());
    let (xlabel, ylabel) = axis_labels(figure);
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for p in points.iter().filter(|p| p.mean.is_finite() && p.x.is_finite()) {
        let name = format!("{} ({})", p.scheme, p.regime);
        match series.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => v.push((p.x, p.mean)),
            None => series.push((name, vec![(p.x, p.mean)])),
        }
    }
    let xs = series.iter().flat_map(|(_, v)| v.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|(_, v)| v.iter().map(|p| p.1));
    let (x0, x1) = nice_bounds(xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = nice_bounds(ys.clone().fold(f64::INFINITY, f64::min).min(0.0), ys.fold(f64::NEG_INFINITY, f64::max));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(figure));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="black"/><text x="{0:.1}" y="{3:.1}" text-anchor="middle">{4}</text>"#,
            sx(fx),
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0,
            format_tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="black"/><text x="{3:.1}" y="{4:.1}" text-anchor="end">{5}</text>"#,
            LEFT - 5.0,
            sy(fy),
            LEFT,
            LEFT - 8.0,
            sy(fy) + 4.0,
            format_tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0:.1}" text-anchor="middle" transform="rotate(-90 20 {0:.1})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(ylabel)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
        }
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text class="legend" x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// Reads a figure CSV and writes its SVG rendering.
pub fn emit_plot(csv_path: &Path, out_path: &Path) -> Result<()> {
    let points = load_csv(csv_path)?;
    if points.is_empty() {
        return Err(Error::Config(format!("{} has no data rows", csv_path.display())));
    }
    std::fs::write(out_path, render_svg(&points))?;
    Ok(())
}

/// Scatter plot of a deployment.
pub fn layout_svg(layout: &Layout, region_m: f64) -> String {
    let size = 480.0;
    let pad = 40.0;
    let scale = (size - 2.0 * pad) / region_m;
    let px = |x: f64| pad + x * scale;
    let py = |y: f64| size - pad - y * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{pad}" y="{pad}" width="{0}" height="{0}" fill="none" stroke="black"/>"#,
        size - 2.0 * pad
    );
    for p in &layout.ue_pos {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#2ca02c"/>"##, px(p.x), py(p.y));
    }
    for (i, p) in layout.rap_pos.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="#1f77b4"/><text x="{:.2}" y="{:.2}">{}</text>"##,
            px(p.x) - 4.0,
            py(p.y) - 4.0,
            px(p.x) + 6.0,
            py(p.y) - 6.0,
            i + 1
        );
    }
    let b = layout.bs_pos;
    let _ = writeln!(
        s,
        r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#d62728"/>"##,
        px(b.x),
        py(b.y) - 7.0,
        px(b.x) - 6.0,
        py(b.y) + 5.0,
        px(b.x) + 6.0,
        py(b.y) + 5.0
    );
    let t = layout.target_pos;
    let _ = writeln!(
        s,
        r##"<path d="M{0:.2},{1:.2} l10,10 m0,-10 l-10,10" stroke="black" stroke-width="2" transform="translate(-5,-5)"/>"##,
        px(t.x),
        py(t.y)
    );
    let _ = writeln!(
        s,
        r##"<text x="{pad}" y="24">BS (triangle), RAPs (squares), UEs (dots), target (cross)</text>"##
    );
    s.push_str("</svg>\n");
    s
}
