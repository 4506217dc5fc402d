//! Self-contained SVG figures of cycle-averaged curves. Output depends only
//! on the metrics, so regenerating from the same log gives the same bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gaitsim::SimError;

use crate::error::Result;
use crate::metrics::{CycleCurve, GaitMetrics};

const WIDTH: f64 = 520.0;
const PANEL_H: f64 = 150.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 40.0;
const GAP: f64 = 36.0;

/// One panel: a channel, its display name, unit and scale factor.
#[derive(Clone, Copy, Debug)]
pub struct PanelSpec {
    pub channel: &'static str,
    pub title: &'static str,
    pub unit: &'static str,
    pub scale: f64,
    /// Fixed y range, or `None` to fit the data.
    pub range: Option<(f64, f64)>,
}

pub struct FigureSpec {
    pub file: &'static str,
    pub title: &'static str,
    pub panels: Vec<PanelSpec>,
}

fn panel(channel: &'static str, title: &'static str, unit: &'static str, scale: f64, range: Option<(f64, f64)>) -> PanelSpec {
    PanelSpec {
        channel,
        title,
        unit,
        scale,
        range,
    }
}

/// The standard figure set: right-leg activations, joint angles, ground
/// reaction and joint torques.
pub fn standard_figures() -> Vec<FigureSpec> {
    let act = |c, t| panel(c, t, "activation", 1.0, Some((0.0, 1.0)));
    let deg = 180.0 / std::f64::consts::PI;
    vec![
        FigureSpec {
            file: "activations.svg",
            title: "Right-leg muscle activation",
            panels: vec![
                act("a_TA_r", "TA"),
                act("a_SOL_r", "SOL"),
                act("a_GAS_r", "GAS"),
                act("a_FEM_r", "FEM"),
                act("a_HAM_r", "HAM"),
                act("a_GLU_r", "GLU"),
                act("a_ILI_r", "ILI"),
            ],
        },
        FigureSpec {
            file: "joint_angles.svg",
            title: "Right-leg joint angles",
            panels: vec![
                panel("q_r_h", "Hip (flexion +)", "deg", deg, None),
                panel("q_r_k", "Knee (extension +)", "deg", deg, None),
                panel("q_r_a", "Ankle (dorsiflexion +)", "deg", deg, None),
            ],
        },
        FigureSpec {
            file: "grf.svg",
            title: "Right-foot ground reaction",
            panels: vec![
                panel("grf_r_norm", "Normal", "N", 1.0, None),
                panel("grf_r_fric", "Friction", "N", 1.0, None),
            ],
        },
        FigureSpec {
            file: "torques.svg",
            title: "Right-leg muscle joint torques",
            panels: vec![
                panel("tau_r_hip", "Hip", "N·m", 1.0, None),
                panel("tau_r_knee", "Knee", "N·m", 1.0, None),
                panel("tau_r_ankle", "Ankle", "N·m", 1.0, None),
            ],
        },
    ]
}

fn fit_range(c: Option<&CycleCurve>, scale: f64) -> (f64, f64) {
    let Some(c) = c else { return (0.0, 1.0) };
    let lo = c.mean.iter().zip(&c.std).map(|(m, s)| (m - s) * scale).fold(f64::INFINITY, f64::min);
    let hi = c.mean.iter().zip(&c.std).map(|(m, s)| (m + s) * scale).fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-6);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_figure(fig: &FigureSpec, metrics: &GaitMetrics) -> String {
    let n = fig.panels.len().max(1) as f64;
    let height = TOP + n * (PANEL_H + GAP);
    let pw = WIDTH - LEFT - RIGHT;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);
    let caption = if metrics.available() {
        format!("{} (mean ± std of {} cycles)", fig.title, metrics.cycle_count)
    } else {
        format!("{} (no complete gait cycles)", fig.title)
    };
    let _ = writeln!(s, r#"<text x="{LEFT}" y="20" font-size="13">{}</text>"#, escape(&caption));

    for (i, p) in fig.panels.iter().enumerate() {
        let y0 = TOP + i as f64 * (PANEL_H + GAP);
        let curve = metrics.curve(p.channel);
        let (lo, hi) = p.range.unwrap_or_else(|| fit_range(curve, p.scale));
        let px = |frac: f64| LEFT + pw * frac;
        let py = |v: f64| y0 + PANEL_H * (1.0 - (v - lo) / (hi - lo));

        if let Some(stance) = metrics.stance_percent {
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{y0:.2}" width="{:.2}" height="{PANEL_H:.2}" fill="#eeeeee"/>"##,
                px(0.0),
                pw * stance / 100.0
            );
        }
        if let Some(c) = curve {
            let k = c.mean.len().saturating_sub(1).max(1) as f64;
            let mut band = String::new();
            for (j, (m, sd)) in c.mean.iter().zip(&c.std).enumerate() {
                let _ = write!(band, "{:.2},{:.2} ", px(j as f64 / k), py((m + sd) * p.scale));
            }
            for (j, (m, sd)) in c.mean.iter().zip(&c.std).enumerate().rev() {
                let _ = write!(band, "{:.2},{:.2} ", px(j as f64 / k), py((m - sd) * p.scale));
            }
            let _ = writeln!(s, r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.6"/>"##, band.trim_end());
            let line: Vec<String> = c
                .mean
                .iter()
                .enumerate()
                .map(|(j, m)| format!("{:.2},{:.2}", px(j as f64 / k), py(m * p.scale)))
                .collect();
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="1.5"/>"##,
                line.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT:.2}" y="{y0:.2}" width="{pw:.2}" height="{PANEL_H:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(s, r#"<text x="{LEFT:.2}" y="{:.2}">{}</text>"#, y0 - 6.0, escape(p.title));
        for (v, anchor_y) in [(hi, y0 + 4.0), (lo, y0 + PANEL_H)] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{anchor_y:.2}" text-anchor="end">{v:.2}</text>"#,
                LEFT - 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">{}</text>"#,
            y0 + PANEL_H / 2.0,
            y0 + PANEL_H / 2.0,
            escape(p.unit)
        );
        for pct in [0, 25, 50, 75, 100] {
            let x = px(pct as f64 / 100.0);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{pct}</text>"#,
                y0 + PANEL_H + 13.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">gait cycle (%)</text>"#,
        LEFT + pw / 2.0,
        height - 6.0
    );
    s.push_str("</svg>\n");
    s
}

/// Write the standard figure set into `dir`.
pub fn emit_plots(metrics: &GaitMetrics, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    standard_figures()
        .iter()
        .map(|fig| {
            let path = dir.join(fig.file);
            std::fs::write(&path, render_figure(fig, metrics)).map_err(|e| SimError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MeanStd, METRICS_SCHEMA_VERSION};

    fn empty() -> GaitMetrics {
        GaitMetrics {
            schema_version: METRICS_SCHEMA_VERSION,
            cycle_count: 0,
            heel_strikes_s: vec![],
            stride_length_m: None,
            step_frequency_per_min: None,
            mean_speed_mps: None,
            stance_percent: None,
            activation_peaks: vec![],
            fell: false,
            curves: vec![],
        }
    }

    #[test]
    fn empty_metrics_still_draw_axes() {
        let figs = standard_figures();
        let svg = render_figure(&figs[0], &empty());
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("no complete gait cycles"));
        assert_eq!(svg.matches(r#"fill="none" stroke="black""#).count(), 7);
        assert!(!svg.contains("polyline"));
    }

    #[test]
    fn curves_draw_band_and_shading() {
        let mut m = empty();
        m.cycle_count = 7;
        m.stance_percent = Some(60.0);
        m.stride_length_m = Some(MeanStd { mean: 1.0, std: 0.0 });
        m.curves.push(CycleCurve {
            name: "a_SOL_r".into(),
            mean: (0..101).map(|k| k as f64 / 100.0).collect(),
            std: vec![0.05; 101],
        });
        let figs = standard_figures();
        let a = render_figure(&figs[0], &m);
        assert!(a.contains("7 cycles"));
        assert_eq!(a.matches("<polyline").count(), 1);
        assert_eq!(a.matches("<polygon").count(), 1);
        assert_eq!(a.matches(r##"fill="#eeeeee""##).count(), 7);
        assert_eq!(a, render_figure(&figs[0], &m));
    }
}
