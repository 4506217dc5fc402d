//! Objectives of the two optimization steps, evaluated from a rollout log.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::plant::LogRow;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitnessConfig {
    /// Target walking distance of the first step, m.
    pub psi_m: f64,
    pub w_vel: f64,
    pub w_angle: f64,
    pub w_grf: f64,
    pub w_effort: f64,
    pub ankle_max_deg: f64,
    pub ankle_min_deg: f64,
    pub grf_threshold_n: f64,
    pub mass_kg: f64,
    pub gravity_mps2: f64,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        Self {
            psi_m: 10.0,
            w_vel: 100.0,
            w_angle: 0.1,
            w_grf: 10.0,
            w_effort: 0.1,
            ankle_max_deg: 60.0,
            ankle_min_deg: -60.0,
            grf_threshold_n: 1096.4,
            mass_kg: 74.5314,
            gravity_mps2: 9.794,
        }
    }
}

impl FitnessConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("fitness.w_vel", self.w_vel),
            ("fitness.w_angle", self.w_angle),
            ("fitness.w_grf", self.w_grf),
            ("fitness.w_effort", self.w_effort),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::config(key, format!("{v} must be finite and >= 0")));
            }
        }
        for (key, v) in [
            ("fitness.psi_m", self.psi_m),
            ("fitness.grf_threshold_n", self.grf_threshold_n),
            ("fitness.mass_kg", self.mass_kg),
            ("fitness.gravity_mps2", self.gravity_mps2),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(SimError::config(key, format!("{v} must be finite and > 0")));
            }
        }
        for (key, v) in [("fitness.ankle_max_deg", self.ankle_max_deg), ("fitness.ankle_min_deg", self.ankle_min_deg)] {
            if !v.is_finite() {
                return Err(SimError::config(key, format!("{v} must be finite")));
            }
        }
        if !(self.ankle_min_deg < self.ankle_max_deg) {
            return Err(SimError::config(
                "fitness.ankle_min_deg",
                format!("{} must be below ankle_max_deg ({})", self.ankle_min_deg, self.ankle_max_deg),
            ));
        }
        Ok(())
    }
}

/// Remaining distance to the target: ψ − √(ν² + 1) x_COM(T).
pub fn fitness_j1(final_com_x: f64, psi: f64, slope: f64) -> f64 {
    psi - (slope * slope + 1.0).sqrt() * final_com_x
}

/// The four terms of the second-step objective, unweighted, plus the
/// weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct J2Components {
    pub vel: f64,
    pub angle: f64,
    pub grf: f64,
    pub effort: f64,
    pub total: f64,
}

/// Distances below this are treated as this when normalizing effort, m.
pub const MIN_EFFORT_DISTANCE_M: f64 = 0.01;

/// Centre-of-mass speed along the ground direction.
pub fn along_slope_speed(com_vel: [f64; 2], slope: f64) -> f64 {
    (com_vel[0] + slope * com_vel[1]) / (1.0 + slope * slope).sqrt()
}

pub fn ankle_penalty(q_a: f64, max_rad: f64, min_rad: f64) -> f64 {
    (q_a - max_rad).max(0.0) - (q_a - min_rad).min(0.0)
}

/// Second-step hybrid objective over the pre-termination log rows.
pub fn fitness_j2(
    rows: &[LogRow],
    fell: bool,
    final_com_x: f64,
    slope: f64,
    v_des: f64,
    dt_sim: f64,
    cfg: &FitnessConfig,
) -> J2Components {
    let t_count = rows.len().max(1) as f64;
    let (q_max, q_min) = (cfg.ankle_max_deg.to_radians(), cfg.ankle_min_deg.to_radians());
    let mg = cfg.mass_kg * cfg.gravity_mps2;
    let (mut vel, mut angle, mut grf, mut energy) = (0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let v = along_slope_speed(r.com_vel, slope);
        vel += (v - v_des).powi(2);
        angle += ankle_penalty(r.q[5], q_max, q_min) + ankle_penalty(r.q[9], q_max, q_min);
        grf += (0..2)
            .map(|s| (r.normal_load(s) - cfg.grf_threshold_n).max(0.0))
            .sum::<f64>()
            / mg;
        energy += dt_sim / cfg.mass_kg * r.metabolic_w;
    }
    let vel = vel / t_count + if fell { 1.0 } else { 0.0 };
    let angle = angle / t_count;
    let grf = grf / t_count;
    let effort = energy / final_com_x.max(MIN_EFFORT_DISTANCE_M);
    let total = cfg.w_vel * vel + cfg.w_angle * angle + cfg.w_grf * grf + cfg.w_effort * effort;
    J2Components {
        vel,
        angle,
        grf,
        effort,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflex::GaitPhase;

    fn row(vx: f64, ankle: f64, load: f64, metabolic: f64) -> LogRow {
        let mut q = [0.0; 11];
        q[5] = ankle;
        q[9] = ankle;
        LogRow {
            t: 0.0,
            q,
            qd: [0.0; 11],
            sigma: [0.0; 14],
            activation: [0.0; 14],
            fiber_force: [0.0; 14],
            grf: [0.0, load / 2.0, 0.0, load / 2.0, 0.0, 0.0, 0.0, 0.0],
            joint_torque: [0.0; 6],
            interaction: [0.0; 2],
            phases: [GaitPhase::EarlyStance; 2],
            metabolic_w: metabolic,
            com: [0.0, 1.0],
            com_vel: [vx, 0.0],
            heel_x: [0.0; 2],
        }
    }

    #[test]
    fn j1_examples() {
        assert_eq!(fitness_j1(12.0, 10.0, 0.0), -2.0);
        assert_eq!(fitness_j1(0.0, 10.0, 0.0), 10.0);
        assert!((fitness_j1(9.96, 10.0, 0.1) - (10.0 - 1.01f64.sqrt() * 9.96)).abs() < 1e-12);
        assert!(fitness_j1(9.96, 10.0, 0.1) < 0.0);
        assert!(fitness_j1(9.95, 10.0, 0.1) > 0.0);
    }

    #[test]
    fn ankle_penalty_examples() {
        let (mx, mn) = (60f64.to_radians(), -60f64.to_radians());
        assert_eq!(ankle_penalty(0.3, mx, mn), 0.0);
        assert!((ankle_penalty(70f64.to_radians(), mx, mn) - 10f64.to_radians()).abs() < 1e-12);
        assert!((ankle_penalty(-65f64.to_radians(), mx, mn) - 5f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn j2_terms_by_hand() {
        let cfg = FitnessConfig::default();
        let rows = vec![row(1.0, 0.0, 500.0, 300.0), row(0.8, 0.0, 1196.4, 300.0)];
        let j = fitness_j2(&rows, false, 2.0, 0.0, 1.0, 0.005, &cfg);
        assert!((j.vel - 0.02).abs() < 1e-12);
        assert_eq!(j.angle, 0.0);
        assert!((j.grf - 100.0 / (74.5314 * 9.794) / 2.0).abs() < 1e-12);
        assert!((j.effort - 2.0 * 0.005 / 74.5314 * 300.0 / 2.0).abs() < 1e-12);
        let total = 100.0 * j.vel + 10.0 * j.grf + 0.1 * j.effort;
        assert!((j.total - total).abs() < 1e-12);
    }

    #[test]
    fn fall_adds_unit_velocity_penalty() {
        let cfg = FitnessConfig::default();
        let rows = vec![row(1.0, 0.0, 0.0, 0.0)];
        let a = fitness_j2(&rows, false, 1.0, 0.0, 1.0, 0.005, &cfg);
        let b = fitness_j2(&rows, true, 1.0, 0.0, 1.0, 0.005, &cfg);
        assert_eq!(a.vel, 0.0);
        assert_eq!(b.vel, 1.0);
    }

    #[test]
    fn perfect_walk_has_zero_penalties() {
        let cfg = FitnessConfig::default();
        let rows: Vec<_> = (0..100).map(|_| row(1.0, 0.1, 700.0, 0.0)).collect();
        let j = fitness_j2(&rows, false, 1.0, 0.0, 1.0, 0.005, &cfg);
        assert_eq!(j.total, 0.0);
    }

    #[test]
    fn slope_speed_projection() {
        let v = along_slope_speed([1.0, 0.1], 0.1);
        assert!((v - 1.01f64.sqrt()).abs() < 1e-12);
    }
}
