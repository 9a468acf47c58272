//! Static SVG scatter plot of an embedding, one circle per point.

use std::fmt::Write as _;
use std::path::Path;

use volscreen::chemspace::NOISE;

use crate::config::PlotSection;
use crate::CliError;

pub const NOISE_COLOR: &str = "#9e9e9e";

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#393b79",
];

pub fn cluster_color(label: i32) -> &'static str {
    if label == NOISE {
        NOISE_COLOR
    } else {
        PALETTE[label.rem_euclid(PALETTE.len() as i32) as usize]
    }
}

/// Renders the scatter. Medoid points get a black outline; the legend is
/// text only so every shape in the document is a data point.
pub fn render_scatter(points: &[[f64; 2]], labels: &[i32], medoids: &[usize], style: &PlotSection) -> Result<String, CliError> {
    if points.is_empty() {
        return Err(CliError::Validation("nothing to plot".into()));
    }
    if labels.len() != points.len() {
        return Err(CliError::Validation(format!("{} points but {} labels", points.len(), labels.len())));
    }
    let (w, h) = (style.width as f64, style.height as f64);
    let margin = 20.0 + style.marker_radius;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let sx = if x1 > x0 { (w - 2.0 * margin) / (x1 - x0) } else { 0.0 };
    let sy = if y1 > y0 { (h - 2.0 * margin) / (y1 - y0) } else { 0.0 };
    let px = |x: f64| if sx > 0.0 { margin + (x - x0) * sx } else { w / 2.0 };
    // SVG y grows downwards
    let py = |y: f64| if sy > 0.0 { h - margin - (y - y0) * sy } else { h / 2.0 };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        style.width, style.height, style.width, style.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<g id="points">"#);
    // noise first so clusters draw on top
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| (labels[i] != NOISE, medoids.contains(&i), i));
    for i in order {
        let (x, y) = (px(points[i][0]), py(points[i][1]));
        let outline = if medoids.contains(&i) { r#" stroke="black" stroke-width="2""# } else { "" };
        let _ = writeln!(
            s,
            r#"<circle class="pt" data-index="{i}" data-cluster="{}" cx="{x:.3}" cy="{y:.3}" r="{}" fill="{}"{outline}/>"#,
            labels[i],
            if medoids.contains(&i) { style.marker_radius * 2.0 } else { style.marker_radius },
            cluster_color(labels[i]),
        );
    }
    let _ = writeln!(s, "</g>");
    let mut clusters: Vec<i32> = labels.iter().copied().filter(|&l| l != NOISE).collect();
    clusters.sort_unstable();
    clusters.dedup();
    let _ = writeln!(s, r#"<g id="legend" font-family="sans-serif" font-size="12">"#);
    for (k, c) in clusters.iter().enumerate() {
        let n = labels.iter().filter(|&&l| l == *c).count();
        let _ = writeln!(s, r#"<text x="8" y="{}" fill="{}">cluster {c} (n={n})</text>"#, 16 + 14 * k, cluster_color(*c));
    }
    let noise = labels.iter().filter(|&&l| l == NOISE).count();
    if noise > 0 {
        let _ = writeln!(s, r#"<text x="8" y="{}" fill="{NOISE_COLOR}">noise (n={noise})</text>"#, 16 + 14 * clusters.len());
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

pub fn emit_svg_scatter(
    points: &[[f64; 2]],
    labels: &[i32],
    medoids: &[usize],
    style: &PlotSection,
    path: &Path,
) -> Result<(), CliError> {
    let svg = render_scatter(points, labels, medoids, style)?;
    crate::io::write_bytes(path, svg.as_bytes())
}
