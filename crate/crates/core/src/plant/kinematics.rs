//! Forward kinematics, point Jacobians and their time derivatives.
//!
//! Angles are counter-clockwise positive with x forward and y up. A segment at
//! absolute angle θ points along (sin θ, −cos θ) from its proximal joint.

use nalgebra::{SMatrix, SVector, Vector2};

use super::body::{BodyParams, Segment};
use crate::muscle::Side;

pub const NQ: usize = 11;
pub type VecQ = SVector<f64, NQ>;
pub type MatQ = SMatrix<f64, NQ, NQ>;
pub type PointJacobian = SMatrix<f64, 2, NQ>;

pub const IX: usize = 0;
pub const IY: usize = 1;
pub const IPITCH: usize = 2;

pub fn hip_index(side: Side) -> usize {
    3 + 4 * side.index()
}
pub fn knee_index(side: Side) -> usize {
    4 + 4 * side.index()
}
pub fn ankle_index(side: Side) -> usize {
    5 + 4 * side.index()
}
pub fn exo_index(side: Side) -> usize {
    6 + 4 * side.index()
}

/// Counter-clockwise perpendicular, the derivative of a rotated vector.
#[inline]
pub fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

#[inline]
pub fn rotate(theta: f64, v: [f64; 2]) -> Vector2<f64> {
    let (s, c) = theta.sin_cos();
    Vector2::new(c * v[0] - s * v[1], s * v[0] + c * v[1])
}

/// One of the nine rigid bodies, in inertia-bookkeeping order
/// (upper body, then thigh, shank, foot and exoskeleton strut of each leg).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BodyId {
    pub segment: Segment,
    pub side: Side,
}

impl BodyId {
    pub const COUNT: usize = 9;

    pub fn from_index(i: usize) -> BodyId {
        let seg = |segment, side| BodyId { segment, side };
        match i {
            0 => seg(Segment::UpperBody, Side::Right),
            1..=8 => {
                let side = if i <= 4 { Side::Right } else { Side::Left };
                let k = (i - 1) % 4;
                let segment = [Segment::Thigh, Segment::Shank, Segment::Foot, Segment::ExoThigh][k];
                seg(segment, side)
            }
            _ => panic!("body index {i} out of range"),
        }
    }

    pub fn all() -> impl Iterator<Item = BodyId> {
        (0..Self::COUNT).map(Self::from_index)
    }

    /// Rotational coordinates the absolute angle of this body sums over.
    pub fn angle_coordinates(self) -> &'static [usize] {
        const UB: [usize; 1] = [IPITCH];
        const R: [[usize; 4]; 4] = [[2, 3, 0, 0], [2, 3, 4, 0], [2, 3, 4, 5], [2, 3, 6, 0]];
        const L: [[usize; 4]; 4] = [[2, 7, 0, 0], [2, 7, 8, 0], [2, 7, 8, 9], [2, 7, 10, 0]];
        let table = if self.side == Side::Right { &R } else { &L };
        match self.segment {
            Segment::UpperBody => &UB,
            Segment::Thigh => &table[0][..2],
            Segment::Shank => &table[1][..3],
            Segment::Foot => &table[2][..4],
            Segment::ExoThigh => &table[3][..3],
        }
    }
}

/// Position and velocity of the joints of one leg and absolute segment angles.
#[derive(Clone, Copy, Debug)]
pub struct LegKinematics {
    pub knee: Vector2<f64>,
    pub knee_vel: Vector2<f64>,
    pub ankle: Vector2<f64>,
    pub ankle_vel: Vector2<f64>,
    pub thigh_angle: f64,
    pub shank_angle: f64,
    pub foot_angle: f64,
    pub exo_angle: f64,
    pub thigh_rate: f64,
    pub shank_rate: f64,
    pub foot_rate: f64,
    pub exo_rate: f64,
}

/// Kinematic state of the whole model at one instant.
#[derive(Clone, Debug)]
pub struct Kinematics<'a> {
    pub body: &'a BodyParams,
    pub q: VecQ,
    pub qd: VecQ,
    pub hip: Vector2<f64>,
    pub hip_vel: Vector2<f64>,
    pub legs: [LegKinematics; 2],
}

/// A body-fixed point with its position, velocity, Jacobian and the
/// velocity-product term J̇ q̇.
#[derive(Clone, Debug)]
pub struct PointKinematics {
    pub pos: Vector2<f64>,
    pub vel: Vector2<f64>,
    pub jac: PointJacobian,
    pub jac_dot: PointJacobian,
    pub jdot_qd: Vector2<f64>,
}

impl<'a> Kinematics<'a> {
    pub fn new(body: &'a BodyParams, q: &VecQ, qd: &VecQ) -> Self {
        let hip = Vector2::new(q[IX], q[IY]);
        let hip_vel = Vector2::new(qd[IX], qd[IY]);
        let legs = [Side::Right, Side::Left].map(|side| {
            let (h, k, a, e) = (hip_index(side), knee_index(side), ankle_index(side), exo_index(side));
            let thigh_angle = q[IPITCH] + q[h];
            let shank_angle = thigh_angle + q[k];
            let foot_angle = shank_angle + q[a];
            let exo_angle = thigh_angle + q[e];
            let thigh_rate = qd[IPITCH] + qd[h];
            let shank_rate = thigh_rate + qd[k];
            let foot_rate = shank_rate + qd[a];
            let exo_rate = thigh_rate + qd[e];
            let knee = hip + rotate(thigh_angle, [0.0, -body.thigh_length_m]);
            let knee_vel = hip_vel + thigh_rate * perp(knee - hip);
            let ankle = knee + rotate(shank_angle, [0.0, -body.shank_length_m]);
            let ankle_vel = knee_vel + shank_rate * perp(ankle - knee);
            LegKinematics {
                knee,
                knee_vel,
                ankle,
                ankle_vel,
                thigh_angle,
                shank_angle,
                foot_angle,
                exo_angle,
                thigh_rate,
                shank_rate,
                foot_rate,
                exo_rate,
            }
        });
        Self {
            body,
            q: *q,
            qd: *qd,
            hip,
            hip_vel,
            legs,
        }
    }

    pub fn leg(&self, side: Side) -> &LegKinematics {
        &self.legs[side.index()]
    }

    pub fn angle(&self, b: BodyId) -> (f64, f64) {
        let l = self.leg(b.side);
        match b.segment {
            Segment::UpperBody => (self.q[IPITCH], self.qd[IPITCH]),
            Segment::Thigh => (l.thigh_angle, l.thigh_rate),
            Segment::Shank => (l.shank_angle, l.shank_rate),
            Segment::Foot => (l.foot_angle, l.foot_rate),
            Segment::ExoThigh => (l.exo_angle, l.exo_rate),
        }
    }

    /// Base joint of a body (position, velocity): the hip for the upper body,
    /// thigh and strut, the knee for the shank and the ankle for the foot.
    fn base(&self, b: BodyId) -> (Vector2<f64>, Vector2<f64>) {
        let l = self.leg(b.side);
        match b.segment {
            Segment::UpperBody | Segment::Thigh | Segment::ExoThigh => (self.hip, self.hip_vel),
            Segment::Shank => (l.knee, l.knee_vel),
            Segment::Foot => (l.ankle, l.ankle_vel),
        }
    }

    /// Pivot of a rotational coordinate within the chain of `side`.
    fn pivot(&self, coord: usize, side: Side) -> (Vector2<f64>, Vector2<f64>) {
        let l = self.leg(side);
        if coord == knee_index(side) {
            (l.knee, l.knee_vel)
        } else if coord == ankle_index(side) {
            (l.ankle, l.ankle_vel)
        } else {
            (self.hip, self.hip_vel)
        }
    }

    /// Kinematics of the point at `local` (segment frame) from the body's
    /// base joint.
    pub fn point(&self, b: BodyId, local: [f64; 2]) -> PointKinematics {
        let (theta, omega) = self.angle(b);
        let (base, base_vel) = self.base(b);
        let pos = base + rotate(theta, local);
        let vel = base_vel + omega * perp(pos - base);
        self.point_at(b, pos, vel)
    }

    /// Kinematics of the material point of body `b` currently at world
    /// position `pos` and moving with `vel`.
    pub fn point_at(&self, b: BodyId, pos: Vector2<f64>, vel: Vector2<f64>) -> PointKinematics {
        let mut jac = PointJacobian::zeros();
        jac[(0, IX)] = 1.0;
        jac[(1, IY)] = 1.0;
        let mut jac_dot = PointJacobian::zeros();
        let mut jdot_qd = Vector2::zeros();
        for &c in b.angle_coordinates() {
            let (pv, pv_vel) = self.pivot(c, b.side);
            let col = perp(pos - pv);
            let dcol = perp(vel - pv_vel);
            jac[(0, c)] = col.x;
            jac[(1, c)] = col.y;
            jac_dot[(0, c)] = dcol.x;
            jac_dot[(1, c)] = dcol.y;
            jdot_qd += self.qd[c] * dcol;
        }
        PointKinematics {
            pos,
            vel,
            jac,
            jac_dot,
            jdot_qd,
        }
    }

    /// Centre-of-mass offset of a body from its base joint.
    pub fn com_local(&self, b: BodyId) -> [f64; 2] {
        let body = self.body;
        match b.segment {
            Segment::UpperBody => [0.0, body.upper_body_com_m],
            Segment::Thigh => [0.0, -body.thigh_com_m],
            Segment::Shank => [0.0, -body.shank_com_m],
            Segment::Foot => body.foot_com_m,
            Segment::ExoThigh => [0.0, -body.exo_com_m],
        }
    }

    pub fn com(&self, b: BodyId) -> PointKinematics {
        self.point(b, self.com_local(b))
    }

    /// Whole-body centre of mass position and velocity.
    pub fn system_com(&self) -> (Vector2<f64>, Vector2<f64>) {
        let mut p = Vector2::zeros();
        let mut v = Vector2::zeros();
        let mut m = 0.0;
        for b in BodyId::all() {
            let mj = self.body.segment(b.segment).mass_kg;
            let c = self.com(b);
            p += mj * c.pos;
            v += mj * c.vel;
            m += mj;
        }
        (p / m, v / m)
    }

    /// Foot body of `side`.
    pub fn foot(side: Side) -> BodyId {
        BodyId {
            segment: Segment::Foot,
            side,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_state(seed: u64) -> (VecQ, VecQ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let q = VecQ::from_fn(|_, _| rng.gen_range(-0.8..0.8));
        let qd = VecQ::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        (q, qd)
    }

    #[test]
    fn neutral_pose_is_upright() {
        let body = BodyParams::default();
        let q = VecQ::zeros();
        let k = Kinematics::new(&body, &q, &VecQ::zeros());
        let r = k.leg(Side::Right);
        assert!((r.knee - Vector2::new(0.0, -0.40)).norm() < 1e-15);
        assert!((r.ankle - Vector2::new(0.0, -0.83)).norm() < 1e-15);
        let heel = k.point(Kinematics::foot(Side::Right), body.heel_m);
        assert!((heel.pos - Vector2::new(-0.06, -0.88)).norm() < 1e-15);
    }

    #[test]
    fn knee_flexion_moves_ankle_backward() {
        let body = BodyParams::default();
        let mut q = VecQ::zeros();
        q[knee_index(Side::Right)] = -0.3;
        let k = Kinematics::new(&body, &q, &VecQ::zeros());
        assert!(k.leg(Side::Right).ankle.x < 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let body = BodyParams::default();
        for seed in 0..20 {
            let (q, qd) = random_state(seed);
            for b in BodyId::all() {
                let k = Kinematics::new(&body, &q, &qd);
                let p = k.point(b, [0.03, -0.02]);
                assert!((p.vel - p.jac * qd).norm() < 1e-12);
                for i in 0..NQ {
                    let h = 1e-6;
                    let mut qp = q;
                    qp[i] += h;
                    let mut qm = q;
                    qm[i] -= h;
                    let pp = Kinematics::new(&body, &qp, &qd).point(b, [0.03, -0.02]).pos;
                    let pm = Kinematics::new(&body, &qm, &qd).point(b, [0.03, -0.02]).pos;
                    let fd = (pp - pm) / (2.0 * h);
                    assert!((fd.x - p.jac[(0, i)]).abs() < 1e-8);
                    assert!((fd.y - p.jac[(1, i)]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn jdot_qdot_matches_finite_difference_in_time() {
        let body = BodyParams::default();
        for seed in 0..20 {
            let (q, qd) = random_state(100 + seed);
            for b in BodyId::all() {
                let k = Kinematics::new(&body, &q, &qd);
                let p = k.point(b, [0.01, 0.05]);
                // d/dt (J q̇) at constant q̇ is J̇ q̇.
                let h = 1e-6;
                let jp = Kinematics::new(&body, &(q + h * qd), &qd).point(b, [0.01, 0.05]).jac;
                let jm = Kinematics::new(&body, &(q - h * qd), &qd).point(b, [0.01, 0.05]).jac;
                let fd = (jp - jm) * qd / (2.0 * h);
                assert!((fd - p.jdot_qd).norm() < 1e-7, "{fd} vs {}", p.jdot_qd);
            }
        }
    }
}
