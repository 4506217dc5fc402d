//! Compliant foot-ground contact: Hunt-Crossley normal force and a
//! Stribeck-type friction law on heel and toe spheres.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::body::positive;
use super::kinematics::{perp, BodyId, Kinematics, PointJacobian};
use crate::error::{Result, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactParams {
    /// Hunt-Crossley stiffness, N/m^1.5.
    pub k: f64,
    /// Dissipation, s/m.
    pub c: f64,
    pub mu_s: f64,
    pub mu_d: f64,
    /// Viscous friction, s/m.
    pub mu_v: f64,
    /// Transition (peak-friction) slip speed, m/s.
    pub v_t: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            k: 160000.0,
            c: 1.0,
            mu_s: 0.9,
            mu_d: 0.6,
            mu_v: 0.6,
            v_t: 0.15,
        }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<()> {
        positive("contact.k", self.k)?;
        positive("contact.c", self.c)?;
        positive("contact.v_t", self.v_t)?;
        for (key, v) in [("contact.mu_d", self.mu_d), ("contact.mu_v", self.mu_v)] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::config(key, format!("{v} must be finite and >= 0")));
            }
        }
        if !self.mu_s.is_finite() || self.mu_s < self.mu_d {
            return Err(SimError::config(
                "contact.mu_s",
                format!("{} must be finite and >= mu_d ({})", self.mu_s, self.mu_d),
            ));
        }
        Ok(())
    }
}

/// Hunt-Crossley normal force k δ^{3/2} (1 + 1.5 c δ̇), never adhesive.
pub fn normal_contact(delta: f64, delta_dot: f64, k: f64, c: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    (k * delta * delta.sqrt() * (1.0 + 1.5 * c * delta_dot)).max(0.0)
}

/// Friction magnitude for slip speed `v` (the sign of `v` is ignored; the
/// caller orients the force against the slip).
pub fn friction_force(normal: f64, v: f64, p: &ContactParams) -> f64 {
    let v = v.abs();
    let r = v / p.v_t;
    normal * (r.min(1.0) * (p.mu_d + 2.0 * (p.mu_s - p.mu_d) / (1.0 + r * r)) + p.mu_v * v)
}

/// Inclined ground line y = ν x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ground {
    pub slope: f64,
}

impl Ground {
    pub fn new(slope: f64) -> Self {
        Self { slope }
    }

    /// Outward unit normal.
    pub fn normal(&self) -> Vector2<f64> {
        Vector2::new(-self.slope, 1.0) / (1.0 + self.slope * self.slope).sqrt()
    }

    /// Unit tangent pointing uphill-forward.
    pub fn tangent(&self) -> Vector2<f64> {
        Vector2::new(1.0, self.slope) / (1.0 + self.slope * self.slope).sqrt()
    }

    /// Signed distance of `p` above the ground.
    pub fn clearance(&self, p: Vector2<f64>) -> f64 {
        self.normal().dot(&p)
    }

    /// Vertical height of `p` above the ground line.
    pub fn height(&self, p: Vector2<f64>) -> f64 {
        p.y - self.slope * p.x
    }
}

/// Evaluated contact of one sphere.
#[derive(Clone, Debug)]
pub struct SphereContact {
    pub depth: f64,
    pub depth_rate: f64,
    /// Normal force, N (≥ 0).
    pub normal: f64,
    /// Friction force along the ground tangent, N (signed).
    pub friction: f64,
    /// Tangential slip velocity of the contact point, m/s.
    pub slip: f64,
    pub point: Vector2<f64>,
    /// World-frame force on the foot.
    pub force: Vector2<f64>,
    /// Jacobian of the material contact point.
    pub jac: PointJacobian,
}

impl SphereContact {
    fn none(point: Vector2<f64>) -> Self {
        Self {
            depth: 0.0,
            depth_rate: 0.0,
            normal: 0.0,
            friction: 0.0,
            slip: 0.0,
            point,
            force: Vector2::zeros(),
            jac: PointJacobian::zeros(),
        }
    }
}

/// Contact of the sphere centred at `center_local` (from the ankle, foot frame).
pub fn sphere_contact(
    kin: &Kinematics<'_>,
    foot: BodyId,
    center_local: [f64; 2],
    radius: f64,
    ground: &Ground,
    params: &ContactParams,
) -> SphereContact {
    let center = kin.point(foot, center_local);
    let n = ground.normal();
    let t = ground.tangent();
    let depth = radius - ground.clearance(center.pos);
    let point = center.pos - radius * n;
    if depth <= 0.0 {
        return SphereContact::none(point);
    }
    let depth_rate = -n.dot(&center.vel);
    let normal = normal_contact(depth, depth_rate, params.k, params.c);
    let (_, omega) = kin.angle(foot);
    let point_vel = center.vel + omega * perp(point - center.pos);
    let slip = t.dot(&point_vel);
    let friction = -slip.signum() * friction_force(normal, slip, params);
    let friction = if slip == 0.0 { 0.0 } else { friction };
    let cp = kin.point_at(foot, point, point_vel);
    SphereContact {
        depth,
        depth_rate,
        normal,
        friction,
        slip,
        point,
        force: normal * n + friction * t,
        jac: cp.jac,
    }
}
