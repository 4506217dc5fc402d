//! Muscle energy expenditure split into activation, maintenance and
//! shortening heat plus positive mechanical work.

use serde::{Deserialize, Serialize};

use super::curves::CurveSet;
use super::hill::{MuscleParams, MuscleState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetabolicParams {
    /// Activation heat per unit muscle mass at full activation, W/kg.
    pub activation_w_per_kg: f64,
    /// Maintenance heat per unit muscle mass, W/kg.
    pub maintenance_w_per_kg: f64,
    /// Shortening heat per unit of contractile power (dimensionless).
    pub shortening_coefficient: f64,
    pub density_kg_per_m3: f64,
    pub specific_tension_pa: f64,
}

impl Default for MetabolicParams {
    fn default() -> Self {
        Self {
            activation_w_per_kg: 40.0,
            maintenance_w_per_kg: 74.0,
            shortening_coefficient: 0.25,
            density_kg_per_m3: 1059.7,
            specific_tension_pa: 0.25e6,
        }
    }
}

impl MetabolicParams {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::plant::body::positive;
        positive("metabolic.density_kg_per_m3", self.density_kg_per_m3)?;
        positive("metabolic.specific_tension_pa", self.specific_tension_pa)?;
        for (key, v) in [
            ("metabolic.activation_w_per_kg", self.activation_w_per_kg),
            ("metabolic.maintenance_w_per_kg", self.maintenance_w_per_kg),
            ("metabolic.shortening_coefficient", self.shortening_coefficient),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(crate::SimError::config(key, format!("{v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetabolicRates {
    pub activation: f64,
    pub maintenance: f64,
    pub shortening: f64,
    pub work: f64,
}

impl MetabolicRates {
    pub fn total(&self) -> f64 {
        self.activation + self.maintenance + self.shortening + self.work
    }
}

/// Muscle mass from physiological cross-section and optimal fiber length.
pub fn muscle_mass(p: &MuscleParams, m: &MetabolicParams) -> f64 {
    p.f_opt * p.l_opt * m.density_kg_per_m3 / m.specific_tension_pa
}

/// Energy rates (W) of one muscle at the given state.
pub fn metabolic_rates(
    state: &MuscleState,
    p: &MuscleParams,
    curves: &CurveSet,
    m: &MetabolicParams,
) -> MetabolicRates {
    let mass = muscle_mass(p, m);
    let a = state.activation;
    // Fiber velocity in m/s, shortening negative.
    let v = state.fiber_velocity * p.v_max * p.l_opt;
    let f_ce = state.active_force.max(0.0);
    let shortening = if v < 0.0 {
        m.shortening_coefficient * f_ce * v.abs()
    } else {
        0.0
    };
    MetabolicRates {
        activation: mass * m.activation_w_per_kg * a * a,
        maintenance: mass * m.maintenance_w_per_kg * curves.active_fl.value(state.fiber_length) * a,
        shortening,
        work: (-f_ce * v).max(0.0),
    }
}
