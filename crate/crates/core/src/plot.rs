//! Minimal deterministic SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self { name: name.into(), xs, ys }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    /// Free text under the title, e.g. a fitted slope.
    pub annotation: Option<String>,
    /// Emitted as the `<desc>` element, e.g. the effective configuration.
    pub description: Option<String>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 60.0, 50.0); // left, right, top, bottom
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn transform(v: f64, scale: Scale) -> Option<f64> {
    match scale {
        Scale::Linear => v.is_finite().then_some(v),
        Scale::Log => (v > 0.0 && v.is_finite()).then(|| v.log10()),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64, scale: Scale) -> String {
    match scale {
        Scale::Linear => format!("{v:.3}"),
        Scale::Log => format!("1e{v:.1}"),
    }
}

/// Renders the series as one chart. Points that are non-finite, or not
/// positive on a log axis, are an error.
pub fn render_svg(series: &[Series], spec: &PlotSpec) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.xs.is_empty()) {
        return Err(invalid("cannot plot an empty series"));
    }
    let mut pts: Vec<Vec<(f64, f64)>> = Vec::with_capacity(series.len());
    for s in series {
        if s.xs.len() != s.ys.len() {
            return Err(invalid(format!("series {:?} has {} x and {} y values", s.name, s.xs.len(), s.ys.len())));
        }
        let mapped = s
            .xs
            .iter()
            .zip(&s.ys)
            .map(|(&x, &y)| match (transform(x, spec.x_scale), transform(y, spec.y_scale)) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(invalid(format!("series {:?} has a point ({x}, {y}) the axes cannot show", s.name))),
            })
            .collect::<Result<Vec<_>>>()?;
        pts.push(mapped);
    }
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    // Degenerate ranges get a unit window around the value.
    if x1 - x0 <= 0.0 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 <= 0.0 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let (l, r, t, b) = MARGIN;
    let (pw, ph) = (WIDTH - l - r, HEIGHT - t - b);
    let px = |x: f64| l + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| t + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    // Writing into a String cannot fail.
    let _ = writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    if let Some(d) = &spec.description {
        let _ = writeln!(w, "<desc>{}</desc>", escape(d));
    }
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{}" y="20" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(&spec.title));
    if let Some(a) = &spec.annotation {
        let _ = writeln!(w, r#"<text x="{}" y="40" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(a));
    }
    let _ = writeln!(w, r#"<rect x="{l}" y="{t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(xv), t + ph + 18.0, tick_label(xv, spec.x_scale));
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 6.0, py(yv) + 4.0, tick_label(yv, spec.y_scale));
    }
    let _ = writeln!(w, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, l + pw / 2.0, HEIGHT - 10.0, escape(&spec.x_label));
    let _ = writeln!(w, r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#, t + ph / 2.0, t + ph / 2.0, escape(&spec.y_label));
    for (i, (s, p)) in series.iter().zip(&pts).enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        if p.len() > 1 {
            let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(w, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        }
        for &(x, y) in p {
            let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, px(x), py(y));
        }
        let ly = t + 14.0 + 16.0 * i as f64;
        let _ = writeln!(w, r#"<text x="{:.2}" y="{ly:.2}" fill="{colour}">{}</text>"#, l + 10.0, escape(&s.name));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn plot_emit(series: &[Series], spec: &PlotSpec, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(series, spec)?)?;
    Ok(())
}
