//! Minimal SVG line charts.
//!
//! Output is a single standalone `<svg>` document: axes with ticks, axis
//! labels, one `<polyline>` per series, and a legend when more than one
//! series is drawn. Long traces are thinned to a min/max envelope per pixel
//! column so spikes survive decimation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid, DsgError, Result};
use crate::sim::{Column, TimeSeries};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Chart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with_series(mut self, label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
        });
        self
    }
}

/// Chart of the selected columns against time.
pub fn timeseries_chart(series: &TimeSeries, columns: &[Column], title: &str) -> Result<Chart> {
    if series.is_empty() {
        return Err(DsgError::EmptyTrajectory);
    }
    if columns.is_empty() {
        return Err(invalid("columns", "select at least one column"));
    }
    let y_label = columns.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ");
    let mut chart = Chart::new(title, "t [s]", y_label);
    for &c in columns {
        let pts = series.samples().iter().map(|s| (s.t, c.of(s))).collect();
        chart = chart.with_series(c.name(), pts);
    }
    Ok(chart)
}

/// Step size from the 1-2-5 sequence giving roughly `target` intervals.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo, 6.0);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1e-3);
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

/// Keep the first and last point plus the extremes of each pixel bucket.
fn decimate(points: &[(f64, f64)], x0: f64, x1: f64, buckets: usize) -> Vec<(f64, f64)> {
    if points.len() <= 2 * buckets {
        return points.to_vec();
    }
    let mut out = Vec::with_capacity(2 * buckets + 2);
    let width = (x1 - x0) / buckets as f64;
    let mut i = 0;
    while i < points.len() {
        let bucket = ((points[i].0 - x0) / width).floor();
        let mut j = i;
        let (mut lo, mut hi) = (i, i);
        while j < points.len() && ((points[j].0 - x0) / width).floor() == bucket {
            if points[j].1 < points[lo].1 {
                lo = j;
            }
            if points[j].1 > points[hi].1 {
                hi = j;
            }
            j += 1;
        }
        let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        out.push(points[a]);
        if b != a {
            out.push(points[b]);
        }
        i = j;
    }
    if out.last() != points.last() {
        out.push(points[points.len() - 1]);
    }
    if out.first() != points.first() {
        out.insert(0, points[0]);
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(chart: &Chart) -> Result<String> {
    if chart.series.is_empty() || chart.series.iter().any(|s| s.points.is_empty()) {
        return Err(DsgError::EmptyTrajectory);
    }
    let finite = || {
        chart
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
    };
    let (x0, x1) = range(finite().map(|p| p.0)).ok_or(DsgError::EmptyTrajectory)?;
    let (y0, y1) = range(finite().map(|p| p.1)).ok_or(DsgError::EmptyTrajectory)?;

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&chart.title)
    );

    let _ = writeln!(svg, r##"<g stroke="#ddd" stroke-width="1">"##);
    for x in ticks(x0, x1) {
        let _ = writeln!(svg, r#"<line x1="{0:.2}" y1="{TOP}" x2="{0:.2}" y2="{1}"/>"#, sx(x), TOP + ph);
    }
    for y in ticks(y0, y1) {
        let _ = writeln!(svg, r#"<line x1="{LEFT}" y1="{0:.2}" x2="{1}" y2="{0:.2}"/>"#, sy(y), LEFT + pw);
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for x in ticks(x0, x1) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            sx(x),
            TOP + ph + 18.0,
            fmt_tick(x)
        );
    }
    for y in ticks(y0, y1) {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            LEFT - 6.0,
            sy(y),
            fmt_tick(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="x-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 14.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text class="y-label" x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );

    for (k, s) in chart.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        let pts = decimate(&pts, x0, x1, pw as usize);
        let mut attr = String::with_capacity(pts.len() * 16);
        for (x, y) in pts {
            let _ = write!(attr, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline data-series="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(&s.label),
            attr.trim_end()
        );
    }

    if chart.series.len() > 1 {
        let _ = writeln!(svg, r#"<g class="legend">"#);
        for (k, s) in chart.series.iter().enumerate() {
            let y = TOP + 14.0 + 18.0 * k as f64;
            let x = LEFT + pw - 130.0;
            let color = PALETTE[k % PALETTE.len()];
            let _ = writeln!(
                svg,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
                x + 20.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y}" dominant-baseline="middle">{}</text>"#,
                x + 26.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_chart(chart: &Chart, path: &Path) -> Result<()> {
    let svg = render_svg(chart)?;
    std::fs::write(path, svg).map_err(|source| DsgError::Io {
        path: path.to_path_buf(),
        source,
    })
}
