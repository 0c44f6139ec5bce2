//! Hand-written SVG line charts of sweep aggregates.
//!
//! Two panels side by side: mean agreement and its standard deviation, one
//! polyline per series, x on a log2 scale. Numbers are printed with fixed
//! precision so identical input gives identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eval::Aggregate;
use crate::{Error, Result};

/// What the x axis measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostAxis {
    /// Initial queries drawn by the attacker.
    #[default]
    Queries,
    /// Billed API calls (predictions plus explanations).
    ApiCalls,
}

impl FromStr for CostAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "queries" => Ok(CostAxis::Queries),
            "api-calls" => Ok(CostAxis::ApiCalls),
            _ => Err(Error::Config(format!(
                "unknown cost axis `{s}`; expected queries or api-calls"
            ))),
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

const PANEL_W: f64 = 380.0;
const PANEL_H: f64 = 260.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 40.0;
const GAP: f64 = 90.0;
const LEGEND_W: f64 = 190.0;

/// One line of the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(x, mean, std)` sorted by x.
    pub points: Vec<(f64, f64, f64)>,
}

/// Groups aggregates into series in first-seen order. Labels carry the
/// dataset only when more than one dataset is present.
pub fn series(aggregates: &[Aggregate], axis: CostAxis) -> Result<Vec<Series>> {
    if aggregates.is_empty() {
        return Err(Error::Input("no aggregates to plot".into()));
    }
    let multi = aggregates.iter().any(|a| a.dataset != aggregates[0].dataset);
    let mut out: Vec<Series> = Vec::new();
    for a in aggregates {
        let label = if multi {
            format!("{}/{}", a.dataset, a.strategy)
        } else {
            a.strategy.to_string()
        };
        let x = match axis {
            CostAxis::Queries => a.query_size as f64,
            CostAxis::ApiCalls => a.mean_api_calls,
        };
        if !(x > 0.0) {
            return Err(Error::Input(format!("{label}: cost {x} cannot go on a log axis")));
        }
        let p = (x, a.mean_agreement, a.std_agreement);
        match out.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(p),
            None => out.push(Series { label, points: vec![p] }),
        }
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(out)
}

struct Panel {
    x0: f64,
    title: &'static str,
    y_max: f64,
}

pub fn render_svg(aggregates: &[Aggregate], axis: CostAxis) -> Result<String> {
    let series = series(aggregates, axis)?;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0.log2()));
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    let (lo, hi) = (lo.floor(), hi.ceil().max(lo.floor() + 1.0));
    let std_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.2))
        .fold(0.0f64, f64::max);
    let std_top = ((std_max * 1.1) / 0.05).ceil().max(1.0) * 0.05;
    let panels = [
        Panel {
            x0: LEFT,
            title: "mean agreement",
            y_max: 1.0,
        },
        Panel {
            x0: LEFT + PANEL_W + GAP,
            title: "std of agreement",
            y_max: std_top,
        },
    ];
    let width = LEFT + 2.0 * PANEL_W + GAP + LEGEND_W;
    let height = TOP + PANEL_H + 60.0;
    let x_label = match axis {
        CostAxis::Queries => "queries",
        CostAxis::ApiCalls => "API calls",
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (k, panel) in panels.iter().enumerate() {
        let px = |v: f64| panel.x0 + (v.log2() - lo) / (hi - lo) * PANEL_W;
        let py = |v: f64| TOP + PANEL_H - v / panel.y_max * PANEL_H;
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{TOP:.2}" width="{PANEL_W:.2}" height="{PANEL_H:.2}" fill="none" stroke="#444"/>"##,
            panel.x0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            panel.x0 + PANEL_W / 2.0,
            TOP - 12.0,
            panel.title
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
            panel.x0 + PANEL_W / 2.0,
            TOP + PANEL_H + 38.0
        );
        let mut e = lo as i32;
        while e as f64 <= hi {
            let x = px(2f64.powi(e));
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + PANEL_H,
                TOP + PANEL_H + 5.0,
                TOP + PANEL_H + 19.0,
                tick_label(e)
            );
            e += 1;
        }
        for i in 0..=5 {
            let v = panel.y_max * i as f64 / 5.0;
            let y = py(v);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
                panel.x0 - 5.0,
                panel.x0,
                panel.x0 - 8.0,
                y + 4.0
            );
        }
        for (j, ser) in series.iter().enumerate() {
            let pts: Vec<String> = ser
                .points
                .iter()
                .map(|p| {
                    let v = if k == 0 { p.1 } else { p.2 };
                    format!("{:.2},{:.2}", px(p.0), py(v))
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="series" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
                PALETTE[j % PALETTE.len()],
                pts.join(" ")
            );
        }
    }
    let lx = LEFT + 2.0 * PANEL_W + GAP + 20.0;
    s.push_str("<g class=\"legend\">\n");
    for (j, ser) in series.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * j as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            PALETTE[j % PALETTE.len()],
            lx + 30.0,
            y + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

fn tick_label(e: i32) -> String {
    if (0..=20).contains(&e) {
        (1u64 << e).to_string()
    } else {
        format!("2^{e}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
