use std::fmt::Write as _;

use crate::bench::trial::TrialResult;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "config_hash",
    "seed",
    "algorithm",
    "map",
    "robots",
    "success",
    "convergence_time_s",
    "distance_m",
    "collisions_rr",
    "collisions_ro",
    "coverage_frac",
    "peak_edge_bw_bps",
];

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Io(format!("csv: {e}"))
}

/// One row per trial under [`CSV_HEADER`]; failed trials leave the time empty.
pub fn emit_csv(results: &[TrialResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in results {
        w.write_record([
            r.config_hash.clone(),
            r.seed.to_string(),
            r.algorithm.to_string(),
            r.map.clone(),
            r.robots.to_string(),
            r.success.to_string(),
            r.convergence_time_s.map(|t| t.to_string()).unwrap_or_default(),
            r.total_distance_m.to_string(),
            r.collisions_rr.to_string(),
            r.collisions_ro.to_string(),
            r.coverage_fraction.to_string(),
            r.bandwidth.max_edge_peak_bps.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

/// A named series; `values[k]` belongs to the k-th group or x position.
/// NaN marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSeries {
    pub name: String,
    pub values: Vec<f64>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 140.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn y_max(series: &[ChartSeries]) -> f64 {
    let m = series
        .iter()
        .flat_map(|s| s.values.iter())
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    if m > 0.0 {
        m * 1.1
    } else {
        1.0
    }
}

fn frame(out: &mut String, title: &str, y_label: &str, top: f64) {
    let plot_h = HEIGHT - TOP - BOTTOM;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    for k in 0..=4 {
        let v = top * k as f64 / 4.0;
        let y = HEIGHT - BOTTOM - plot_h * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/><line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        HEIGHT - BOTTOM,
        HEIGHT - BOTTOM,
        WIDTH - RIGHT,
        HEIGHT - BOTTOM
    );
}

fn legend(out: &mut String, series: &[ChartSeries]) {
    for (k, s) in series.iter().enumerate() {
        let y = TOP + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{y:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            WIDTH - RIGHT + 12.0,
            PALETTE[k % PALETTE.len()],
            WIDTH - RIGHT + 30.0,
            y + 10.0,
            escape(&s.name)
        );
    }
}

fn y_of(v: f64, top: f64) -> f64 {
    HEIGHT - BOTTOM - (HEIGHT - TOP - BOTTOM) * v / top
}

/// Bars for every series side by side within each group.
pub fn grouped_bar_svg(title: &str, y_label: &str, groups: &[String], series: &[ChartSeries]) -> String {
    let top = y_max(series);
    let mut out = String::new();
    frame(&mut out, title, y_label, top);
    let plot_w = WIDTH - LEFT - RIGHT;
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (g, name) in groups.iter().enumerate() {
        let x0 = LEFT + group_w * g as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x0 + group_w / 2.0,
            HEIGHT - BOTTOM + 18.0,
            escape(name)
        );
        for (k, s) in series.iter().enumerate() {
            let Some(&v) = s.values.get(g) else { continue };
            if !v.is_finite() {
                continue;
            }
            let y = y_of(v, top);
            let _ = writeln!(
                out,
                r#"<rect class="bar" x="{:.1}" y="{y:.1}" width="{bar_w:.1}" height="{:.1}" fill="{}"/>"#,
                x0 + group_w * 0.1 + bar_w * k as f64,
                HEIGHT - BOTTOM - y,
                PALETTE[k % PALETTE.len()]
            );
        }
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

/// One polyline per series over the shared x positions (e.g. robot counts).
pub fn scaling_svg(title: &str, y_label: &str, xs: &[f64], series: &[ChartSeries]) -> String {
    let top = y_max(series);
    let mut out = String::new();
    frame(&mut out, title, y_label, top);
    let plot_w = WIDTH - LEFT - RIGHT;
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x_of = |x: f64| LEFT + plot_w * (0.05 + 0.9 * (x - lo) / span);
    for &x in xs {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x}</text>"#,
            x_of(x),
            HEIGHT - BOTTOM + 18.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(&s.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&x, &v)| (x_of(x), y_of(v, top)))
            .collect();
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
        }
        for (x, y) in pts {
            let _ = writeln!(out, r#"<circle class="point" cx="{x:.1}" cy="{y:.1}" r="4" fill="{color}"/>"#);
        }
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}
