//! Musculotendon path geometry: lengths, moment arms and joint torques.
//!
//! Paths are straight lines between attachment points. For each spanned joint
//! both end points are expressed in that joint's frame, where the moment arm
//! is the distance from the origin to the line through them.

use serde::Deserialize;

use crate::error::{Result, SimError};
use crate::muscle::{MuscleId, MuscleKind, Side};
use crate::plant::body::{BodyParams, Joint, Segment};

/// Rigid planar transform, the homogeneous matrix [R(θ) t; 0 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame2 {
    c: f64,
    s: f64,
    t: [f64; 2],
}

impl Frame2 {
    pub const IDENTITY: Frame2 = Frame2 {
        c: 1.0,
        s: 0.0,
        t: [0.0, 0.0],
    };

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { c, s, t: [0.0, 0.0] }
    }

    pub fn translation(x: f64, y: f64) -> Self {
        Self {
            c: 1.0,
            s: 0.0,
            t: [x, y],
        }
    }

    /// `self · other`.
    pub fn then(&self, other: &Frame2) -> Frame2 {
        let p = self.apply(other.t);
        Frame2 {
            c: self.c * other.c - self.s * other.s,
            s: self.s * other.c + self.c * other.s,
            t: p,
        }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.c * p[0] - self.s * p[1] + self.t[0],
            self.s * p[0] + self.c * p[1] + self.t[1],
        ]
    }

    pub fn inverse(&self) -> Frame2 {
        let t = [
            -(self.c * self.t[0] + self.s * self.t[1]),
            self.s * self.t[0] - self.c * self.t[1],
        ];
        Frame2 {
            c: self.c,
            s: -self.s,
            t,
        }
    }

    /// Rotation block determinant; 1 for every rigid transform.
    pub fn det(&self) -> f64 {
        self.c * self.c + self.s * self.s
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Path of one muscle over one or two joints.
#[derive(Clone, Debug, PartialEq)]
pub struct MusclePath {
    pub kind: MuscleKind,
    pub joints: Vec<Joint>,
    /// Origin on the proximal segment A, in {A}.
    p_origin: [f64; 2],
    /// Insertion on the distal segment (B or C), in its frame.
    p_insertion: [f64; 2],
    /// {A} with respect to {J1}.
    t_j1_a: Frame2,
    /// {B} with respect to the rotated {J1'}.
    t_j1r_b: Frame2,
    /// {J2} with respect to {B}; biarticular only.
    t_b_j2: Frame2,
    /// {C} with respect to the rotated {J2'}; biarticular only.
    t_j2r_c: Frame2,
}

/// Length and signed moment arms at one posture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathEval {
    pub length: f64,
    pub joints: [Joint; 2],
    /// Signed arms −∂l/∂θ per spanned joint; a positive arm means tension
    /// drives the joint counter-clockwise.
    pub arms: [f64; 2],
    pub count: usize,
}

impl PathEval {
    pub fn spanned(&self) -> impl Iterator<Item = (Joint, f64)> + '_ {
        (0..self.count).map(move |i| (self.joints[i], self.arms[i]))
    }

    pub fn arm(&self, joint: Joint) -> Option<f64> {
        self.spanned().find(|(j, _)| *j == joint).map(|(_, a)| a)
    }
}

impl MusclePath {
    pub fn monoarticular(
        kind: MuscleKind,
        joint: Joint,
        p1: [f64; 2],
        p2: [f64; 2],
        t_j_a: Frame2,
        t_jr_b: Frame2,
    ) -> Self {
        Self {
            kind,
            joints: vec![joint],
            p_origin: p1,
            p_insertion: p2,
            t_j1_a: t_j_a,
            t_j1r_b: t_jr_b,
            t_b_j2: Frame2::IDENTITY,
            t_j2r_c: Frame2::IDENTITY,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn biarticular(
        kind: MuscleKind,
        joints: [Joint; 2],
        p1: [f64; 2],
        p3: [f64; 2],
        t_j1_a: Frame2,
        t_j1r_b: Frame2,
        t_b_j2: Frame2,
        t_j2r_c: Frame2,
    ) -> Self {
        Self {
            kind,
            joints: joints.to_vec(),
            p_origin: p1,
            p_insertion: p3,
            t_j1_a,
            t_j1r_b,
            t_b_j2,
            t_j2r_c,
        }
    }

    /// Build from segment-frame attachments; frames follow from the joint
    /// positions of `body`.
    pub fn from_segments(
        kind: MuscleKind,
        segments: &[Segment],
        p_origin: [f64; 2],
        p_insertion: [f64; 2],
        body: &BodyParams,
    ) -> Result<Self> {
        let joint_at = |a: Segment, b: Segment| {
            Joint::between(a, b).ok_or_else(|| SimError::Schema {
                what: format!("{} path", kind.name()),
                found: format!("{a:?} -> {b:?}"),
                expected: "adjacent segments, proximal first".into(),
            })
        };
        let offset = |j: Joint, s: Segment| body.joint_in_segment(j, s).expect("adjacent segment");
        let to_frame_of = |j: Joint, s: Segment| {
            let o = offset(j, s);
            Frame2::translation(-o[0], -o[1])
        };
        match segments {
            [a, b] => {
                let j = joint_at(*a, *b)?;
                Ok(Self::monoarticular(
                    kind,
                    j,
                    p_origin,
                    p_insertion,
                    to_frame_of(j, *a),
                    to_frame_of(j, *b),
                ))
            }
            [a, b, c] => {
                let j1 = joint_at(*a, *b)?;
                let j2 = joint_at(*b, *c)?;
                let o = offset(j2, *b);
                Ok(Self::biarticular(
                    kind,
                    [j1, j2],
                    p_origin,
                    p_insertion,
                    to_frame_of(j1, *a),
                    to_frame_of(j1, *b),
                    Frame2::translation(o[0], o[1]),
                    to_frame_of(j2, *c),
                ))
            }
            _ => Err(SimError::Schema {
                what: format!("{} path", kind.name()),
                found: format!("{} segments", segments.len()),
                expected: "2 or 3".into(),
            }),
        }
    }

    pub fn is_biarticular(&self) -> bool {
        self.joints.len() == 2
    }

    /// Length and signed arms. `angles` holds one angle per spanned joint.
    pub fn evaluate(&self, angles: &[f64]) -> Result<PathEval> {
        let p1 = self.t_j1_a.apply(self.p_origin);
        let degenerate = || SimError::DegenerateGeometry {
            muscle: self.kind.name().to_string(),
        };
        if !self.is_biarticular() {
            let p2 = Frame2::rotation(angles[0])
                .then(&self.t_j1r_b)
                .apply(self.p_insertion);
            let l = dist(p1, p2);
            if !(l > 1e-9) {
                return Err(degenerate());
            }
            return Ok(PathEval {
                length: l,
                joints: [self.joints[0], self.joints[0]],
                arms: [-cross(p1, p2) / l, 0.0],
                count: 1,
            });
        }
        // {J2} expressed in {J1}.
        let t_j1_j2 = Frame2::rotation(angles[0])
            .then(&self.t_j1r_b)
            .then(&self.t_b_j2);
        let p3_j2 = Frame2::rotation(angles[1])
            .then(&self.t_j2r_c)
            .apply(self.p_insertion);
        let p3 = t_j1_j2.apply(p3_j2);
        let l = dist(p1, p3);
        if !(l > 1e-9) {
            return Err(degenerate());
        }
        let p1_j2 = t_j1_j2.inverse().apply(p1);
        Ok(PathEval {
            length: l,
            joints: [self.joints[0], self.joints[1]],
            arms: [-cross(p1, p3) / l, -cross(p1_j2, p3_j2) / l],
            count: 2,
        })
    }

    /// Angles of the spanned joints picked from (hip, knee, ankle).
    pub fn select(&self, leg: [f64; 3]) -> [f64; 2] {
        let pick = |j: Joint| match j {
            Joint::Hip => leg[0],
            Joint::Knee => leg[1],
            Joint::Ankle => leg[2],
        };
        let a = pick(self.joints[0]);
        let b = self.joints.get(1).map(|j| pick(*j)).unwrap_or(0.0);
        [a, b]
    }
}

/// Unsigned moment arm of a monoarticular path.
pub fn moment_arm_mono(path: &MusclePath, theta: f64) -> Result<f64> {
    Ok(path.evaluate(&[theta])?.arms[0].abs())
}

/// Unsigned moment arms of a biarticular path about its two joints.
pub fn moment_arm_bi(path: &MusclePath, theta1: f64, theta2: f64) -> Result<(f64, f64)> {
    let e = path.evaluate(&[theta1, theta2])?;
    Ok((e.arms[0].abs(), e.arms[1].abs()))
}

/// Path length and lengthening velocity.
pub fn mt_length_velocity(path: &MusclePath, angles: &[f64], rates: &[f64]) -> Result<(f64, f64)> {
    let e = path.evaluate(angles)?;
    let v = -(0..e.count).map(|i| e.arms[i] * rates[i]).sum::<f64>();
    Ok((e.length, v))
}

/// Joint torque of a muscle: the force along the tendon times the arm.
pub fn muscle_torque(fiber_force: f64, pennation: f64, arm: f64) -> f64 {
    fiber_force * pennation.cos() * arm
}

/// Joint torques of both legs, (hip, knee, ankle) per leg.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JointTorqueVector {
    pub right: [f64; 3],
    pub left: [f64; 3],
}

impl JointTorqueVector {
    pub fn leg(&self, side: Side) -> &[f64; 3] {
        match side {
            Side::Right => &self.right,
            Side::Left => &self.left,
        }
    }

    pub fn leg_mut(&mut self, side: Side) -> &mut [f64; 3] {
        match side {
            Side::Right => &mut self.right,
            Side::Left => &mut self.left,
        }
    }

    pub fn get(&self, side: Side, joint: Joint) -> f64 {
        self.leg(side)[joint_slot(joint)]
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.right[0],
            self.right[1],
            self.right[2],
            self.left[0],
            self.left[1],
            self.left[2],
        ]
    }
}

fn joint_slot(j: Joint) -> usize {
    match j {
        Joint::Hip => 0,
        Joint::Knee => 1,
        Joint::Ankle => 2,
    }
}

/// Sum per-muscle joint torques into the joint torque vector.
pub fn aggregate_torques<I>(torques: I) -> JointTorqueVector
where
    I: IntoIterator<Item = (Side, Joint, f64)>,
{
    let mut out = JointTorqueVector::default();
    for (side, joint, tau) in torques {
        out.leg_mut(side)[joint_slot(joint)] += tau;
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFile {
    schema_version: u32,
    muscle: Vec<MuscleRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MuscleRecord {
    name: String,
    segments: Vec<String>,
    points: [[f64; 2]; 2],
}

pub const GEOMETRY_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_GEOMETRY: &str = include_str!("../data/geometry.toml");

/// Paths of the seven muscles of a leg, indexed by `MuscleKind`.
#[derive(Clone, Debug, PartialEq)]
pub struct MuscleGeometry {
    paths: Vec<MusclePath>,
}

impl MuscleGeometry {
    pub fn from_toml(text: &str, body: &BodyParams) -> Result<Self> {
        let file: GeometryFile = toml::from_str(text).map_err(|e| SimError::Parse {
            what: "geometry file".into(),
            reason: e.to_string(),
        })?;
        if file.schema_version != GEOMETRY_SCHEMA_VERSION {
            return Err(SimError::Schema {
                what: "geometry schema_version".into(),
                found: file.schema_version.to_string(),
                expected: GEOMETRY_SCHEMA_VERSION.to_string(),
            });
        }
        let mut slots: Vec<Option<MusclePath>> = vec![None; 7];
        for rec in &file.muscle {
            let kind = MuscleKind::from_name(&rec.name).ok_or_else(|| SimError::Schema {
                what: "geometry muscle name".into(),
                found: rec.name.clone(),
                expected: "one of TA, SOL, GAS, FEM, HAM, GLU, ILI".into(),
            })?;
            let segments = rec
                .segments
                .iter()
                .map(|s| {
                    Segment::from_name(s).ok_or_else(|| SimError::Schema {
                        what: format!("{} segment", rec.name),
                        found: s.clone(),
                        expected: "upper_body, thigh, shank or foot".into(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if rec.points.iter().flatten().any(|x| !x.is_finite()) {
                return Err(SimError::config(
                    format!("geometry.{}.points", rec.name),
                    "must be finite",
                ));
            }
            let path =
                MusclePath::from_segments(kind, &segments, rec.points[0], rec.points[1], body)?;
            slots[kind.index()] = Some(path);
        }
        let paths = slots
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                p.ok_or_else(|| SimError::Schema {
                    what: "geometry file".into(),
                    found: format!("no entry for {}", MuscleKind::ALL[i].name()),
                    expected: "all seven muscles".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { paths })
    }

    pub fn default_for(body: &BodyParams) -> Result<Self> {
        Self::from_toml(DEFAULT_GEOMETRY, body)
    }

    pub fn path(&self, kind: MuscleKind) -> &MusclePath {
        &self.paths[kind.index()]
    }

    /// Evaluate a muscle at the leg posture (hip, knee, ankle).
    pub fn evaluate(&self, id: MuscleId, leg: [f64; 3]) -> Result<PathEval> {
        let p = self.path(id.kind);
        p.evaluate(&p.select(leg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_geometry() -> MuscleGeometry {
        MuscleGeometry::default_for(&BodyParams::default()).unwrap()
    }

    #[test]
    fn transforms_are_rigid_and_invertible() {
        let f = Frame2::rotation(0.7).then(&Frame2::translation(0.1, -0.3));
        assert!((f.det() - 1.0).abs() < 1e-15);
        let p = [0.2, 0.5];
        let back = f.inverse().apply(f.apply(p));
        assert!((back[0] - p[0]).abs() < 1e-15 && (back[1] - p[1]).abs() < 1e-15);
    }

    #[test]
    fn moment_arm_hand_example() {
        let path = MusclePath::monoarticular(
            MuscleKind::Sol,
            Joint::Ankle,
            [0.0, 0.1],
            [0.05, -0.2],
            Frame2::IDENTITY,
            Frame2::IDENTITY,
        );
        let d = moment_arm_mono(&path, 0.0).unwrap();
        let expected = 0.005 / (0.05f64 * 0.05 + 0.3 * 0.3).sqrt();
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 0.01644).abs() < 1e-5);
    }

    #[test]
    fn collinear_path_has_zero_arm() {
        let path = MusclePath::monoarticular(
            MuscleKind::Ta,
            Joint::Ankle,
            [0.0, 0.3],
            [0.0, -0.1],
            Frame2::IDENTITY,
            Frame2::IDENTITY,
        );
        assert_eq!(moment_arm_mono(&path, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn coincident_attachments_are_rejected() {
        let path = MusclePath::monoarticular(
            MuscleKind::Ta,
            Joint::Ankle,
            [0.01, 0.02],
            [0.01, 0.02],
            Frame2::IDENTITY,
            Frame2::IDENTITY,
        );
        assert!(matches!(
            path.evaluate(&[0.0]),
            Err(SimError::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn muscle_torque_examples() {
        assert_eq!(muscle_torque(0.0, 0.0, 0.05), 0.0);
        assert!((muscle_torque(1000.0, 0.0, 0.05) - 50.0).abs() < 1e-12);
        assert!((muscle_torque(1000.0, 60f64.to_radians(), 0.05) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn signed_arms_match_length_derivative() {
        let g = default_geometry();
        for kind in MuscleKind::ALL {
            let p = g.path(kind);
            for k in 0..25 {
                let x = k as f64 / 24.0;
                let angles = [-0.6 + 1.2 * x, -1.0 + 0.9 * (1.0 - x)];
                let e = p.evaluate(&angles).unwrap();
                for j in 0..e.count {
                    let h = 1e-6;
                    let mut ap = angles;
                    ap[j] += h;
                    let mut am = angles;
                    am[j] -= h;
                    let fd = (p.evaluate(&ap).unwrap().length - p.evaluate(&am).unwrap().length)
                        / (2.0 * h);
                    assert!((e.arms[j] + fd).abs() < 1e-8, "{kind:?} joint {j}");
                }
            }
        }
    }

    #[test]
    fn default_actions_have_expected_signs() {
        let g = default_geometry();
        let leg = [0.0, 0.0, 0.0];
        let arm = |k: MuscleKind, j: Joint| {
            g.evaluate(MuscleId::new(Side::Right, k), leg)
                .unwrap()
                .arm(j)
                .unwrap()
        };
        // Counter-clockwise is hip flexion, knee extension and dorsiflexion.
        assert!(arm(MuscleKind::Ta, Joint::Ankle) > 0.0);
        assert!(arm(MuscleKind::Sol, Joint::Ankle) < 0.0);
        assert!(arm(MuscleKind::Gas, Joint::Ankle) < 0.0);
        assert!(arm(MuscleKind::Gas, Joint::Knee) < 0.0);
        assert!(arm(MuscleKind::Fem, Joint::Knee) > 0.0);
        assert!(arm(MuscleKind::Ham, Joint::Knee) < 0.0);
        assert!(arm(MuscleKind::Ham, Joint::Hip) < 0.0);
        assert!(arm(MuscleKind::Glu, Joint::Hip) < 0.0);
        assert!(arm(MuscleKind::Ili, Joint::Hip) > 0.0);
    }

    #[test]
    fn neutral_lengths_sit_near_slack() {
        use crate::muscle::MuscleParams;
        let g = default_geometry();
        for kind in MuscleKind::ALL {
            let p = MuscleParams::reference(kind);
            let l = g.evaluate(MuscleId::new(Side::Right, kind), [0.0; 3]).unwrap().length;
            let rest = p.l_slack + p.l_opt * p.alpha_opt.cos();
            assert!((l - rest).abs() < 0.02, "{kind:?}: {l} vs {rest}");
        }
    }

    #[test]
    fn aggregate_sums_by_joint() {
        let t = aggregate_torques([
            (Side::Right, Joint::Ankle, -30.0),
            (Side::Right, Joint::Ankle, 5.0),
            (Side::Left, Joint::Hip, 2.0),
        ]);
        assert_eq!(t.right, [0.0, 0.0, -25.0]);
        assert_eq!(t.left, [2.0, 0.0, 0.0]);
    }

    #[test]
    fn schema_version_is_checked() {
        let text = DEFAULT_GEOMETRY.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(
            MuscleGeometry::from_toml(&text, &BodyParams::default()),
            Err(SimError::Schema { .. })
        ));
    }
}
