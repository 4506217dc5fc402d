//! Human-exoskeleton interaction and assembly of the generalized force vector.

use serde::{Deserialize, Serialize};

use super::body::positive;
use super::contact::SphereContact;
use super::kinematics::{exo_index, hip_index, VecQ};
use crate::error::Result;
use crate::geometry::JointTorqueVector;
use crate::muscle::Side;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionParams {
    pub k_int_nm_per_deg: f64,
    pub d_int_nms_per_deg: f64,
    /// Treat the strap damping implicitly over one integration substep.
    pub implicit_damping: bool,
}

impl Default for InteractionParams {
    fn default() -> Self {
        Self {
            k_int_nm_per_deg: 100.0,
            d_int_nms_per_deg: 75.0,
            implicit_damping: true,
        }
    }
}

impl InteractionParams {
    pub fn k_per_rad(&self) -> f64 {
        self.k_int_nm_per_deg.to_degrees()
    }

    pub fn d_per_rad(&self) -> f64 {
        self.d_int_nms_per_deg.to_degrees()
    }

    pub fn validate(&self) -> Result<()> {
        positive("interaction.k_int_nm_per_deg", self.k_int_nm_per_deg)?;
        positive("interaction.d_int_nms_per_deg", self.d_int_nms_per_deg)
    }
}

/// Kelvin-Voigt strap torque k q_e + d q̇_e (any consistent angle unit).
pub fn interaction_torque(q_e: f64, dq_e: f64, k: f64, d: f64) -> f64 {
    k * q_e + d * dq_e
}

/// One-sided soft stop against knee hyperextension. Knee extension is the
/// positive direction, so the stop engages above `knee_max_rad`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointLimitParams {
    pub enabled: bool,
    pub knee_max_rad: f64,
    pub stiffness_nm_per_rad: f64,
    /// Damping relative to the spring torque, s/rad.
    pub damping_s_per_rad: f64,
}

impl Default for JointLimitParams {
    fn default() -> Self {
        Self {
            enabled: true,
            knee_max_rad: 0.0,
            stiffness_nm_per_rad: 5000.0,
            damping_s_per_rad: 1.0,
        }
    }
}

impl JointLimitParams {
    pub fn validate(&self) -> Result<()> {
        positive("limits.stiffness_nm_per_rad", self.stiffness_nm_per_rad)?;
        if !(self.damping_s_per_rad.is_finite() && self.damping_s_per_rad >= 0.0) {
            return Err(crate::error::SimError::config(
                "limits.damping_s_per_rad",
                format!("{} must be finite and >= 0", self.damping_s_per_rad),
            ));
        }
        if !self.knee_max_rad.is_finite() {
            return Err(crate::error::SimError::config("limits.knee_max_rad", "must be finite"));
        }
        Ok(())
    }

    /// Stop torque on the knee coordinate. Never pulls the joint into the
    /// stop, so a fast rebound cannot make it sticky.
    pub fn knee_torque(&self, q_k: f64, dq_k: f64) -> f64 {
        let over = q_k - self.knee_max_rad;
        if !self.enabled || over <= 0.0 {
            return 0.0;
        }
        let tau = -self.stiffness_nm_per_rad * over * (1.0 + self.damping_s_per_rad * dq_k);
        tau.min(0.0)
    }
}

/// Q = τ_joint + τ_exo + τ_int + J_grfᵀ F_grf.
///
/// Each interaction torque acts with +1 on the hip coordinate and −1 on the
/// strut coordinate of its leg.
pub fn generalized_forces(
    joint: &JointTorqueVector,
    exo: [f64; 2],
    interaction: [f64; 2],
    contacts: &[SphereContact],
) -> VecQ {
    let mut q = VecQ::zeros();
    for side in Side::BOTH {
        let s = side.index();
        for (k, tau) in joint.leg(side).iter().enumerate() {
            q[hip_index(side) + k] += tau;
        }
        q[exo_index(side)] += exo[s];
        q[hip_index(side)] += interaction[s];
        q[exo_index(side)] -= interaction[s];
    }
    for c in contacts {
        q += c.jac.transpose() * c.force;
    }
    q
}
