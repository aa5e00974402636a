//! Static three-panel SVG chart: objective, infeasibility and stationarity
//! against cumulative proximal steps.

use std::fmt::Write;

use crate::data_io::format_g_prec;
use crate::ippp::{SolveTrace, TraceRecord};

const PANEL_W: f64 = 380.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 40.0;
const GAP: f64 = 24.0;
const LEGEND_H: f64 = 22.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

struct Panel {
    title: &'static str,
    log: bool,
    get: fn(&TraceRecord) -> f64,
}

const PANELS: [Panel; 3] = [
    Panel {
        title: "objective",
        log: false,
        get: |r| r.objective,
    },
    Panel {
        title: "infeasibility F",
        log: true,
        get: |r| r.f,
    },
    Panel {
        title: "stationarity S",
        log: true,
        get: |r| r.s,
    },
];

/// Points of one run in one panel; non-positive values are dropped from
/// logarithmic panels.
fn series(trace: &SolveTrace, panel: &Panel) -> Vec<(f64, f64)> {
    trace
        .records
        .iter()
        .filter_map(|r| {
            let v = (panel.get)(r);
            if !v.is_finite() || (panel.log && v <= 0.0) {
                return None;
            }
            Some((r.cum_steps as f64, if panel.log { v.log10() } else { v }))
        })
        .collect()
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        Some((lo - 0.5, hi + 0.5))
    } else {
        Some((lo, hi))
    }
}

pub fn render(runs: &[(String, SolveTrace)]) -> String {
    let width = MARGIN_L + 3.0 * (PANEL_W + GAP);
    let height = MARGIN_T + PANEL_H + MARGIN_B + LEGEND_H * (runs.len().max(1) as f64) + 8.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (pi, panel) in PANELS.iter().enumerate() {
        let x0 = MARGIN_L + pi as f64 * (PANEL_W + GAP);
        let y0 = MARGIN_T;
        let all: Vec<Vec<(f64, f64)>> = runs.iter().map(|(_, t)| series(t, panel)).collect();
        let label = if panel.log {
            format!("{} (log10)", panel.title)
        } else {
            panel.title.to_string()
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 12.0,
            escape(&label)
        );
        let _ = writeln!(
            s,
            "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"{PANEL_W:.1}\" height=\"{PANEL_H:.1}\" fill=\"none\" stroke=\"#444\"/>"
        );
        let xr = range(all.iter().flatten().map(|p| p.0));
        let yr = range(all.iter().flatten().map(|p| p.1));
        let (Some((xl, xh)), Some((yl, yh))) = (xr, yr) else {
            let _ = writeln!(
                s,
                r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="#888">no data</text>"##,
                x0 + PANEL_W / 2.0,
                y0 + PANEL_H / 2.0
            );
            continue;
        };
        let px = |x: f64| x0 + (x - xl) / (xh - xl) * PANEL_W;
        let py = |y: f64| y0 + PANEL_H - (y - yl) / (yh - yl) * PANEL_H;
        for (v, anchor_y) in [(yl, y0 + PANEL_H), (yh, y0 + 10.0)] {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{anchor_y:.1}" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                format_g_prec(v, 4)
            );
        }
        for (v, anchor) in [(xl, "start"), (xh, "end")] {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{}</text>"#,
                px(v),
                y0 + PANEL_H + 14.0,
                format_g_prec(v, 6)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">cumulative proximal steps</text>"#,
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H + 30.0
        );
        for (ri, pts) in all.iter().enumerate() {
            if pts.is_empty() {
                continue;
            }
            let color = COLORS[ri % COLORS.len()];
            let mut d = String::new();
            for (x, y) in pts {
                let _ = write!(d, "{:.2},{:.2} ", px(*x), py(*y));
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                d.trim_end()
            );
        }
    }
    for (ri, (name, _)) in runs.iter().enumerate() {
        let y = MARGIN_T + PANEL_H + MARGIN_B + 8.0 + ri as f64 * LEGEND_H;
        let color = COLORS[ri % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN_L:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="3"/>"#,
            MARGIN_L + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            MARGIN_L + 30.0,
            y + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
