//! Report generation: one curve CSV and one SVG line plot per metric.
//!
//! CSV values are written with Rust's shortest round-trip float formatting,
//! so a parsed curve equals the aggregated value exactly. SVG plots are
//! self-contained text: one mean polyline per sampler over a shaded
//! 10th–90th percentile band.

use std::path::{Path, PathBuf};

use crate::data::persist::atomic_write;
use crate::error::Result;
use crate::metrics::METRIC_NAMES;
use crate::runner::{aggregate, CurvePoint, ResultSet};
use crate::samplers::SamplerKind;

/// Files written by [`write_report`].
#[derive(Clone, Debug, Default)]
pub struct ReportPaths {
    pub curves: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
}

/// Write `curves/<metric>.csv` and `plots/<metric>.svg` for every metric
/// into `dir`. Returns the created paths (one pair per metric).
pub fn write_report(rs: &ResultSet, dir: &Path) -> Result<ReportPaths> {
    let mut out = ReportPaths::default();
    for metric in METRIC_NAMES {
        let points = aggregate(rs, metric)?;
        let csv_path = dir.join("curves").join(format!("{metric}.csv"));
        atomic_write(&csv_path, curve_csv(&points)?.as_bytes())?;
        let svg_path = dir.join("plots").join(format!("{metric}.svg"));
        atomic_write(&svg_path, svg_plot(metric, &points).as_bytes())?;
        out.curves.push(csv_path);
        out.plots.push(svg_path);
    }
    Ok(out)
}

/// Render aggregated points as CSV with columns
/// `sampler,iteration,mean,p10,p90`.
pub fn curve_csv(points: &[CurvePoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sampler", "iteration", "mean", "p10", "p90"])?;
    for p in points {
        w.write_record([
            p.sampler.as_str(),
            &p.iteration.to_string(),
            &p.mean.to_string(),
            &p.p10.to_string(),
            &p.p90.to_string(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::Error::Format(format!("csv flush failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Color palette for up to eight samplers, in request order.
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 50.0;

/// Render aggregated points as a self-contained SVG line plot: one colored
/// mean polyline per sampler, its p10–p90 band shaded underneath.
pub fn svg_plot(metric: &str, points: &[CurvePoint]) -> String {
    let mut samplers: Vec<SamplerKind> = Vec::new();
    for p in points {
        if !samplers.contains(&p.sampler) {
            samplers.push(p.sampler);
        }
    }
    let max_iter = points.iter().map(|p| p.iteration).max().unwrap_or(0);
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for p in points {
        y_min = y_min.min(p.p10);
        y_max = y_max.max(p.p90);
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    let pad = ((y_max - y_min) * 0.05).max(1e-3);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x = |t: usize| -> f64 {
        if max_iter == 0 {
            MARGIN_L + plot_w / 2.0
        } else {
            MARGIN_L + plot_w * t as f64 / max_iter as f64
        }
    };
    let y = |v: f64| -> f64 { MARGIN_T + plot_h * (1.0 - (v - y_min) / (y_max - y_min)) };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"26\" font-size=\"18\" text-anchor=\"middle\" fill=\"#222\">{metric}</text>\n",
        MARGIN_L + plot_w / 2.0
    ));

    // Axes and ticks.
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_L:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\n",
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    ));
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_L:.2}\" y1=\"{MARGIN_T:.2}\" x2=\"{MARGIN_L:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\n",
        MARGIN_T + plot_h
    ));
    for k in 0..=4 {
        let v = y_min + (y_max - y_min) * k as f64 / 4.0;
        let yy = y(v);
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{yy:.2}\" x2=\"{MARGIN_L:.2}\" y2=\"{yy:.2}\" stroke=\"#444\"/>\n",
            MARGIN_L - 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\" fill=\"#222\">{v:.3}</text>\n",
            MARGIN_L - 9.0,
            yy + 4.0
        ));
    }
    for t in 0..=max_iter {
        let xx = x(t);
        svg.push_str(&format!(
            "  <line x1=\"{xx:.2}\" y1=\"{:.2}\" x2=\"{xx:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{xx:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#222\">{t}</text>\n",
            MARGIN_T + plot_h + 20.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" fill=\"#222\">iteration</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    ));

    // Bands first so every mean line stays visible on top.
    for (s, &kind) in samplers.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let curve: Vec<&CurvePoint> = points.iter().filter(|p| p.sampler == kind).collect();
        let mut band = String::new();
        for p in &curve {
            band.push_str(&format!("{:.2},{:.2} ", x(p.iteration), y(p.p90)));
        }
        for p in curve.iter().rev() {
            band.push_str(&format!("{:.2},{:.2} ", x(p.iteration), y(p.p10)));
        }
        svg.push_str(&format!(
            "  <polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n",
            band.trim_end()
        ));
    }
    for (s, &kind) in samplers.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let line = points
            .iter()
            .filter(|p| p.sampler == kind)
            .map(|p| format!("{:.2},{:.2}", x(p.iteration), y(p.mean)))
            .collect::<Vec<_>>()
            .join(" ");
        svg.push_str(&format!(
            "  <polyline points=\"{line}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n"
        ));
    }

    // Legend, top-right inside the plot area.
    for (s, &kind) in samplers.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let ly = MARGIN_T + 14.0 + 18.0 * s as f64;
        let lx = MARGIN_L + plot_w - 130.0;
        svg.push_str(&format!(
            "  <line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 22.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#222\">{kind}</text>\n",
            lx + 28.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
