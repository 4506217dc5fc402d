//! Per-controller-step log record and its fixed column layout.

use crate::error::{Result, SimError};
use crate::muscle::{MuscleId, MUSCLE_COUNT};
use crate::reflex::GaitPhase;

pub const LOG_SCHEMA_VERSION: u32 = 1;

pub const Q_NAMES: [&str; 11] = [
    "x_ub", "y_ub", "q_ub", "q_r_h", "q_r_k", "q_r_a", "q_r_e", "q_l_h", "q_l_k", "q_l_a", "q_l_e",
];

/// Ground reaction columns, per leg heel then toe, friction then normal.
pub const GRF_NAMES: [&str; 8] = [
    "grf_r_heel_fric",
    "grf_r_heel_norm",
    "grf_r_toe_fric",
    "grf_r_toe_norm",
    "grf_l_heel_fric",
    "grf_l_heel_norm",
    "grf_l_toe_fric",
    "grf_l_toe_norm",
];

pub const TORQUE_NAMES: [&str; 6] = ["tau_r_hip", "tau_r_knee", "tau_r_ankle", "tau_l_hip", "tau_l_knee", "tau_l_ankle"];

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub q: [f64; 11],
    pub qd: [f64; 11],
    pub sigma: [f64; MUSCLE_COUNT],
    pub activation: [f64; MUSCLE_COUNT],
    /// Fiber force, N.
    pub fiber_force: [f64; MUSCLE_COUNT],
    pub grf: [f64; 8],
    pub joint_torque: [f64; 6],
    pub interaction: [f64; 2],
    pub phases: [GaitPhase; 2],
    /// Summed metabolic rate of all muscles, W.
    pub metabolic_w: f64,
    /// Whole-body centre of mass.
    pub com: [f64; 2],
    pub com_vel: [f64; 2],
    /// Horizontal heel-sphere positions, right then left.
    pub heel_x: [f64; 2],
}

impl LogRow {
    pub fn column_names() -> Vec<String> {
        let mut c = vec!["t".to_string()];
        c.extend(Q_NAMES.iter().map(|s| s.to_string()));
        c.extend(Q_NAMES.iter().map(|s| format!("d{s}")));
        for prefix in ["sigma", "a", "f"] {
            c.extend(MuscleId::all().map(|m| format!("{prefix}_{}", m.label())));
        }
        c.extend(GRF_NAMES.iter().map(|s| s.to_string()));
        c.extend(TORQUE_NAMES.iter().map(|s| s.to_string()));
        c.extend(["tau_int_r", "tau_int_l", "phase_r", "phase_l", "metabolic_w"].map(String::from));
        c.extend(["com_x", "com_y", "com_vx", "com_vy", "heel_x_r", "heel_x_l"].map(String::from));
        c
    }

    /// Fields in `column_names` order. Floats use the shortest exact
    /// round-trip representation.
    pub fn to_record(&self) -> Vec<String> {
        let mut r = Vec::with_capacity(112);
        let mut push = |xs: &[f64]| r.extend(xs.iter().map(|x| x.to_string()));
        push(&[self.t]);
        push(&self.q);
        push(&self.qd);
        push(&self.sigma);
        push(&self.activation);
        push(&self.fiber_force);
        push(&self.grf);
        push(&self.joint_torque);
        push(&self.interaction);
        r.push(self.phases[0].label().to_string());
        r.push(self.phases[1].label().to_string());
        let mut push = |xs: &[f64]| r.extend(xs.iter().map(|x| x.to_string()));
        push(&[self.metabolic_w]);
        push(&self.com);
        push(&self.com_vel);
        push(&self.heel_x);
        r
    }

    pub fn from_record<S: AsRef<str>>(fields: &[S]) -> Result<Self> {
        let n = Self::column_names().len();
        if fields.len() != n {
            return Err(SimError::Parse {
                what: "log row".into(),
                reason: format!("{} fields, expected {n}", fields.len()),
            });
        }
        let mut it = fields.iter().map(|s| s.as_ref());
        let mut num = || -> Result<f64> {
            let s = it.next().unwrap_or_default();
            s.trim().parse::<f64>().map_err(|e| SimError::Parse {
                what: "log row".into(),
                reason: format!("`{s}`: {e}"),
            })
        };
        fn arr<const N: usize>(f: &mut dyn FnMut() -> Result<f64>) -> Result<[f64; N]> {
            let mut a = [0.0; N];
            for x in &mut a {
                *x = f()?;
            }
            Ok(a)
        }
        let t = num()?;
        let q = arr::<11>(&mut num)?;
        let qd = arr::<11>(&mut num)?;
        let sigma = arr::<MUSCLE_COUNT>(&mut num)?;
        let activation = arr::<MUSCLE_COUNT>(&mut num)?;
        let fiber_force = arr::<MUSCLE_COUNT>(&mut num)?;
        let grf = arr::<8>(&mut num)?;
        let joint_torque = arr::<6>(&mut num)?;
        let interaction = arr::<2>(&mut num)?;
        let phase_fields: Vec<&str> = fields[Self::phase_column()..Self::phase_column() + 2]
            .iter()
            .map(|s| s.as_ref())
            .collect();
        let phase = |s: &str| {
            GaitPhase::from_label(s.trim()).ok_or_else(|| SimError::Parse {
                what: "log row".into(),
                reason: format!("unknown phase `{s}`"),
            })
        };
        let phases = [phase(phase_fields[0])?, phase(phase_fields[1])?];
        let mut rest = fields[Self::phase_column() + 2..].iter().map(|s| s.as_ref());
        let mut num = || -> Result<f64> {
            let s = rest.next().unwrap_or_default();
            s.trim().parse::<f64>().map_err(|e| SimError::Parse {
                what: "log row".into(),
                reason: format!("`{s}`: {e}"),
            })
        };
        let metabolic_w = num()?;
        let com = arr::<2>(&mut num)?;
        let com_vel = arr::<2>(&mut num)?;
        let heel_x = arr::<2>(&mut num)?;
        Ok(Self {
            t,
            q,
            qd,
            sigma,
            activation,
            fiber_force,
            grf,
            joint_torque,
            interaction,
            phases,
            metabolic_w,
            com,
            com_vel,
            heel_x,
        })
    }

    fn phase_column() -> usize {
        1 + 22 + 3 * MUSCLE_COUNT + 8 + 6 + 2
    }

    /// Total normal ground force under one leg (0 right, 1 left), N.
    pub fn normal_load(&self, side: usize) -> f64 {
        self.grf[4 * side + 1] + self.grf[4 * side + 3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LogRow {
        LogRow {
            t: 0.005,
            q: std::array::from_fn(|i| i as f64 * 0.1),
            qd: std::array::from_fn(|i| -(i as f64) / 3.0),
            sigma: [0.25; 14],
            activation: [0.01; 14],
            fiber_force: std::array::from_fn(|i| 100.0 * i as f64 + 0.5),
            grf: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            joint_torque: [1e-3; 6],
            interaction: [0.1, -0.2],
            phases: [GaitPhase::EarlyStance, GaitPhase::Landing],
            metabolic_w: 123.456,
            com: [0.1, 0.95],
            com_vel: [1.0, 0.0],
            heel_x: [0.2, -0.3],
        }
    }

    #[test]
    fn record_round_trips_exactly() {
        let row = sample();
        let rec = row.to_record();
        assert_eq!(rec.len(), LogRow::column_names().len());
        assert_eq!(LogRow::from_record(&rec).unwrap(), row);
    }

    #[test]
    fn phase_columns_line_up() {
        let names = LogRow::column_names();
        assert_eq!(names[LogRow::phase_column()], "phase_r");
        assert_eq!(names[LogRow::phase_column() + 1], "phase_l");
        assert_eq!(names.len(), 1 + 22 + 42 + 8 + 6 + 2 + 2 + 1 + 6);
    }

    #[test]
    fn normal_load_sums_heel_and_toe() {
        let row = sample();
        assert_eq!(row.normal_load(0), 6.0);
        assert_eq!(row.normal_load(1), 14.0);
    }

    #[test]
    fn short_records_are_rejected() {
        assert!(LogRow::from_record(&["0.0"]).is_err());
    }
}
