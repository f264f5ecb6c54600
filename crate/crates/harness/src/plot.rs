//! Static SVG line plots of traces with a logarithmic y axis.

use crate::error::{HarnessError, Result};
use projfree_core::TraceRecord;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum XAxis {
    WallMs,
    CumComponentGrads,
    CumLoCalls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum YAxis {
    FValue,
    GapToRef,
}

impl XAxis {
    pub fn label(self) -> &'static str {
        match self {
            XAxis::WallMs => "wall_ms",
            XAxis::CumComponentGrads => "cum_component_grads",
            XAxis::CumLoCalls => "cum_lo_calls",
        }
    }

    fn value(self, r: &TraceRecord) -> f64 {
        match self {
            XAxis::WallMs => r.wall_ms,
            XAxis::CumComponentGrads => r.cum_component_grads as f64,
            XAxis::CumLoCalls => r.cum_lo_calls as f64,
        }
    }
}

impl YAxis {
    pub fn label(self) -> &'static str {
        match self {
            YAxis::FValue => "f_value",
            YAxis::GapToRef => "gap_to_ref",
        }
    }

    fn value(self, r: &TraceRecord) -> f64 {
        match self {
            YAxis::FValue => r.f_value,
            YAxis::GapToRef => r.gap_to_ref,
        }
    }
}

/// One labelled trace.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub rows: Vec<TraceRecord>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the series as an SVG document. Points with a nonpositive or
/// non-finite y value cannot sit on a log axis; they break the polyline.
pub fn emit_plot(series: &[Series], x: XAxis, y: YAxis) -> Result<String> {
    if series.is_empty() {
        return Err(HarnessError::Format {
            what: "plot input",
            detail: "no traces given".into(),
        });
    }
    if let Some(s) = series.iter().find(|s| s.rows.is_empty()) {
        return Err(HarnessError::Format {
            what: "plot input",
            detail: format!("trace `{}` is empty", s.label),
        });
    }
    let points: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.rows.iter().map(|r| (x.value(r), y.value(r))).collect())
        .collect();
    let usable = |&(px, py): &(f64, f64)| px.is_finite() && py.is_finite() && py > 0.0;
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points.iter().flatten().filter(|p| usable(p)) {
        x_lo = x_lo.min(p.0);
        x_hi = x_hi.max(p.0);
        y_lo = y_lo.min(p.1.log10());
        y_hi = y_hi.max(p.1.log10());
    }
    if !x_lo.is_finite() {
        return Err(HarnessError::Format {
            what: "plot input",
            detail: format!("no positive {} values to draw on a log scale", y.label()),
        });
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let (y_lo, y_hi) = (y_lo.floor(), y_hi.ceil().max(y_lo.floor() + 1.0));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |v: f64| TOP + (y_hi - v.log10()) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let decades = (y_hi - y_lo) as i32;
    let stride = (decades / 8).max(1);
    for k in (0..=decades).step_by(stride as usize) {
        let e = y_lo as i32 + k;
        let py = sy(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            py + 4.0
        );
    }
    for k in 0..=4 {
        let v = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let px = sx(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        x.label()
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{} (log scale)</text>"#,
        TOP + plot_h / 2.0,
        y.label()
    );
    for (i, (s, pts)) in series.iter().zip(&points).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, r#"<g class="series" data-label="{}">"#, escape(&s.label));
        for run in pts.split(|p| !usable(p)).filter(|r| !r.is_empty()) {
            let coords: Vec<String> = run.iter().map(|&(px, py)| format!("{:.2},{:.2}", sx(px), sy(py))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        let _ = writeln!(svg, "</g>");
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line class="legend" x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}
