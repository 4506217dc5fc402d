//! Gait-cycle segmentation and summary metrics computed from a rollout log.
//!
//! A cycle runs from one right heel strike (Landing to EarlyStance) to the
//! next. Only complete cycles before any fall contribute.

use serde::{Deserialize, Serialize};

use gaitsim::muscle::MuscleId;
use gaitsim::plant::LogRow;
use gaitsim::reflex::GaitPhase;

pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// Samples per resampled cycle, 0 to 100 % of the gait cycle.
pub const CYCLE_POINTS: usize = 101;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population statistics; `None` for an empty sample.
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

/// A quantity averaged over cycles after resampling each cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleCurve {
    pub name: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitMetrics {
    pub schema_version: u32,
    pub cycle_count: usize,
    /// Times of the right heel strikes that bound the cycles, s.
    pub heel_strikes_s: Vec<f64>,
    /// Along-ground heel advance per cycle, m.
    pub stride_length_m: Option<MeanStd>,
    /// Two steps per cycle, per minute.
    pub step_frequency_per_min: Option<f64>,
    /// Along-ground centre-of-mass speed over the complete cycles.
    pub mean_speed_mps: Option<f64>,
    /// Right-foot stance share of the cycle, %.
    pub stance_percent: Option<f64>,
    /// Per-muscle activation peaks, `MuscleId` order.
    pub activation_peaks: Vec<(String, MeanStd)>,
    pub fell: bool,
    pub curves: Vec<CycleCurve>,
}

impl GaitMetrics {
    pub fn available(&self) -> bool {
        self.cycle_count > 0
    }

    pub fn curve(&self, name: &str) -> Option<&CycleCurve> {
        self.curves.iter().find(|c| c.name == name)
    }

    pub fn peak(&self, label: &str) -> Option<MeanStd> {
        self.activation_peaks.iter().find(|(l, _)| l == label).map(|(_, m)| *m)
    }
}

/// Scenario facts the metrics need.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsContext {
    pub slope: f64,
    /// Hip clearance below which the model counts as fallen, m.
    pub fall_height_m: f64,
}

/// Non-activation channels that get cycle curves, after the fourteen
/// `a_<muscle>` activation channels.
const EXTRA_CHANNELS: [&str; 11] = [
    "q_r_h",
    "q_r_k",
    "q_r_a",
    "q_l_h",
    "q_l_k",
    "q_l_a",
    "grf_r_norm",
    "grf_r_fric",
    "tau_r_hip",
    "tau_r_knee",
    "tau_r_ankle",
];

pub fn channel_names() -> Vec<String> {
    MuscleId::all()
        .map(|m| format!("a_{}", m.label()))
        .chain(EXTRA_CHANNELS.iter().map(|s| s.to_string()))
        .collect()
}

/// Values of every channel in `channel_names` order.
pub fn channel_values(r: &LogRow) -> Vec<f64> {
    let mut v = r.activation.to_vec();
    v.extend([r.q[3], r.q[4], r.q[5], r.q[7], r.q[8], r.q[9]]);
    v.extend([r.normal_load(0), r.grf[0] + r.grf[2]]);
    v.extend(&r.joint_torque[..3]);
    v
}

fn hip_clearance(r: &LogRow, slope: f64) -> f64 {
    r.q[1] - slope * r.q[0]
}

/// Linear resampling of samples `(t, y)` onto `CYCLE_POINTS` equally spaced
/// points spanning `[t0, t1]`.
pub fn resample(t: &[f64], y: &[f64], t0: f64, t1: f64) -> Vec<f64> {
    (0..CYCLE_POINTS)
        .map(|k| {
            let tk = t0 + (t1 - t0) * k as f64 / (CYCLE_POINTS - 1) as f64;
            let j = t.partition_point(|&ti| ti <= tk);
            if j == 0 {
                y[0]
            } else if j >= t.len() {
                y[t.len() - 1]
            } else {
                let (ta, tb) = (t[j - 1], t[j]);
                let w = (tk - ta) / (tb - ta);
                y[j - 1] + w * (y[j] - y[j - 1])
            }
        })
        .collect()
}

/// Row indices where the right leg passes from Landing into EarlyStance.
pub fn right_heel_strikes(rows: &[LogRow]) -> Vec<usize> {
    rows.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].phases[0] == GaitPhase::Landing && w[1].phases[0] == GaitPhase::EarlyStance)
        .map(|(i, _)| i + 1)
        .collect()
}

pub fn gait_metrics(rows: &[LogRow], ctx: &MetricsContext) -> GaitMetrics {
    let fall_row = rows.iter().position(|r| hip_clearance(r, ctx.slope) < ctx.fall_height_m);
    let rows = &rows[..fall_row.unwrap_or(rows.len())];
    let strikes = right_heel_strikes(rows);
    let cycles: Vec<(usize, usize)> = strikes.windows(2).map(|w| (w[0], w[1])).collect();
    let along = (1.0 + ctx.slope * ctx.slope).sqrt();

    let strides: Vec<f64> = cycles
        .iter()
        .map(|&(a, b)| (rows[b].heel_x[0] - rows[a].heel_x[0]) * along)
        .collect();
    let durations: Vec<f64> = cycles.iter().map(|&(a, b)| rows[b].t - rows[a].t).collect();
    let (first, last) = (strikes.first().copied(), strikes.last().copied());
    let span = match (first, last) {
        (Some(a), Some(b)) if b > a => Some((a, b)),
        _ => None,
    };
    let mean_speed = span.map(|(a, b)| (rows[b].com[0] - rows[a].com[0]) * along / (rows[b].t - rows[a].t));
    let step_frequency = MeanStd::of(&durations).map(|d| 2.0 * 60.0 / d.mean);
    let stance = span.map(|(a, b)| {
        let n = rows[a..b].iter().filter(|r| r.phases[0].is_stance()).count();
        100.0 * n as f64 / (b - a) as f64
    });

    let activation_peaks = MuscleId::all()
        .filter_map(|m| {
            let peaks: Vec<f64> = cycles
                .iter()
                .map(|&(a, b)| {
                    rows[a..=b]
                        .iter()
                        .map(|r| r.activation[m.index()])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            MeanStd::of(&peaks).map(|s| (m.label(), s))
        })
        .collect();

    let curves = if cycles.is_empty() {
        Vec::new()
    } else {
        let values: Vec<Vec<f64>> = rows.iter().map(channel_values).collect();
        channel_names()
            .into_iter()
            .enumerate()
            .map(|(c, name)| {
                let per_cycle: Vec<Vec<f64>> = cycles
                    .iter()
                    .map(|&(a, b)| {
                        let t: Vec<f64> = rows[a..=b].iter().map(|r| r.t).collect();
                        let y: Vec<f64> = values[a..=b].iter().map(|v| v[c]).collect();
                        resample(&t, &y, rows[a].t, rows[b].t)
                    })
                    .collect();
                let stats: Vec<MeanStd> = (0..CYCLE_POINTS)
                    .map(|k| MeanStd::of(&per_cycle.iter().map(|c| c[k]).collect::<Vec<_>>()).unwrap())
                    .collect();
                CycleCurve {
                    name,
                    mean: stats.iter().map(|s| s.mean).collect(),
                    std: stats.iter().map(|s| s.std).collect(),
                }
            })
            .collect()
    };

    GaitMetrics {
        schema_version: METRICS_SCHEMA_VERSION,
        cycle_count: cycles.len(),
        heel_strikes_s: strikes.iter().map(|&i| rows[i].t).collect(),
        stride_length_m: MeanStd::of(&strides),
        step_frequency_per_min: step_frequency,
        mean_speed_mps: mean_speed,
        stance_percent: stance,
        activation_peaks,
        fell: fall_row.is_some(),
        curves,
    }
}

/// Pearson correlation of two equally sampled curves. `None` when the
/// lengths differ, a curve is too short, or either has zero variance.
pub fn curve_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, phase_r: GaitPhase, heel_x: f64) -> LogRow {
        let mut q = [0.0; 11];
        q[1] = 0.9;
        LogRow {
            t,
            q,
            qd: [0.0; 11],
            sigma: [0.0; 14],
            activation: [0.3; 14],
            fiber_force: [0.0; 14],
            grf: [0.0; 8],
            joint_torque: [0.0; 6],
            interaction: [0.0; 2],
            phases: [phase_r, GaitPhase::EarlyStance],
            metabolic_w: 0.0,
            com: [heel_x, 1.0],
            com_vel: [0.0; 2],
            heel_x: [heel_x, 0.0],
        }
    }

    /// Three right heel strikes at x = 0, 0.6, 1.2, one second apart.
    fn synthetic() -> Vec<LogRow> {
        let mut rows: Vec<LogRow> = Vec::new();
        let mut strikes = 0;
        for i in 0..=560 {
            let t = i as f64 * 0.005;
            let frac = (t + 0.5).fract();
            let phase = match frac {
                f if f < 0.3 => GaitPhase::EarlyStance,
                f if f < 0.6 => GaitPhase::LateStance,
                f if f < 0.7 => GaitPhase::Liftoff,
                f if f < 0.9 => GaitPhase::EarlySwing,
                _ => GaitPhase::Landing,
            };
            if rows.last().is_some_and(|r| r.phases[0] == GaitPhase::Landing) && phase == GaitPhase::EarlyStance {
                strikes += 1;
            }
            rows.push(row(t, phase, 0.6 * (strikes as f64 - 1.0)));
        }
        rows
    }

    fn ctx() -> MetricsContext {
        MetricsContext {
            slope: 0.0,
            fall_height_m: 0.5,
        }
    }

    #[test]
    fn stride_from_heel_positions() {
        let m = gait_metrics(&synthetic(), &ctx());
        assert_eq!(m.cycle_count, 2);
        let s = m.stride_length_m.unwrap();
        assert!((s.mean - 0.6).abs() < 1e-12, "{s:?}");
        assert!(s.std < 1e-12);
        assert!((m.step_frequency_per_min.unwrap() - 120.0).abs() < 1e-9);
        assert!(!m.fell);
    }

    #[test]
    fn constant_activation_peak() {
        let m = gait_metrics(&synthetic(), &ctx());
        let p = m.peak("SOL_r").unwrap();
        assert!((p.mean - 0.3).abs() < 1e-15);
        assert_eq!(p.std, 0.0);
    }

    #[test]
    fn slope_scales_stride() {
        let c = MetricsContext { slope: 0.1, ..ctx() };
        let m = gait_metrics(&synthetic(), &c);
        assert!((m.stride_length_m.unwrap().mean - 0.6 * 1.01f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rows_after_a_fall_are_ignored() {
        let rows = synthetic();
        let base = gait_metrics(&rows, &ctx());
        let mut extended = rows.clone();
        let mut fallen = rows.last().unwrap().clone();
        fallen.q[1] = 0.1;
        for k in 1..200 {
            let mut r = fallen.clone();
            r.t += k as f64 * 0.005;
            r.phases[0] = if k % 50 == 0 { GaitPhase::EarlyStance } else { GaitPhase::Landing };
            extended.push(r);
        }
        let after = gait_metrics(&extended, &ctx());
        assert!(after.fell);
        assert_eq!(GaitMetrics { fell: false, ..after }, base);
    }

    #[test]
    fn too_few_strikes_is_unavailable() {
        let rows: Vec<_> = (0..100).map(|i| row(i as f64 * 0.005, GaitPhase::EarlyStance, 0.0)).collect();
        let m = gait_metrics(&rows, &ctx());
        assert!(!m.available());
        assert!(m.stride_length_m.is_none());
        assert!(m.curves.is_empty());
    }

    #[test]
    fn resampled_sinusoid_matches_analytic_values() {
        let t: Vec<f64> = (0..=200).map(|i| i as f64 * 0.005).collect();
        let y: Vec<f64> = t.iter().map(|t| (std::f64::consts::TAU * t).sin()).collect();
        let r = resample(&t, &y, 0.0, 1.0);
        assert_eq!(r.len(), CYCLE_POINTS);
        for (k, v) in r.iter().enumerate() {
            let exact = (std::f64::consts::TAU * k as f64 / 100.0).sin();
            // Linear interpolation error bound h²/8 max|y''|.
            assert!((v - exact).abs() < 0.005f64.powi(2) / 8.0 * 40.0, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn correlation_examples() {
        let a = [1.0, 2.0, 3.0, 5.0];
        assert!((curve_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((curve_correlation(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        // Means 2.75 and 2.5; Σdxdy = 3.5, Σdx² = 8.75, Σdy² = 5.
        let b = [2.0, 1.0, 4.0, 3.0];
        let r = curve_correlation(&a, &b).unwrap();
        assert!((r - 3.5 / (8.75f64 * 5.0).sqrt()).abs() < 1e-15);
        assert!(curve_correlation(&a, &[1.0; 4]).is_none());
        assert!(curve_correlation(&a, &b[..3]).is_none());
    }
}
