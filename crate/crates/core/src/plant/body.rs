//! Inertial and geometric parameters of the nine-segment human+exoskeleton
//! model.
//!
//! Every segment frame sits at the segment's centre of mass and is aligned
//! with the world frame when all joint angles are zero (upright, feet flat).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentParams {
    pub mass_kg: f64,
    /// Moment of inertia about the centre of mass.
    pub inertia_kgm2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyParams {
    pub upper_body: SegmentParams,
    /// Height of the upper-body centre of mass above the hip.
    pub upper_body_com_m: f64,
    pub thigh: SegmentParams,
    pub thigh_length_m: f64,
    /// Distance of the thigh centre of mass below the hip.
    pub thigh_com_m: f64,
    pub shank: SegmentParams,
    pub shank_length_m: f64,
    /// Distance of the shank centre of mass below the knee.
    pub shank_com_m: f64,
    pub foot: SegmentParams,
    /// Foot centre of mass relative to the ankle, foot frame.
    pub foot_com_m: [f64; 2],
    /// Heel sphere centre relative to the ankle, foot frame.
    pub heel_m: [f64; 2],
    /// Toe sphere centre relative to the ankle, foot frame.
    pub toe_m: [f64; 2],
    pub contact_radius_m: f64,
    pub exo_thigh: SegmentParams,
    /// Distance of the exoskeleton thigh-strut centre of mass below the hip.
    pub exo_com_m: f64,
    pub gravity_mps2: f64,
}

impl Default for BodyParams {
    fn default() -> Self {
        Self {
            upper_body: SegmentParams {
                mass_kg: 44.3804,
                inertia_kgm2: 2.5,
            },
            upper_body_com_m: 0.25,
            thigh: SegmentParams {
                mass_kg: 9.3014,
                inertia_kgm2: 0.1412,
            },
            thigh_length_m: 0.40,
            thigh_com_m: 0.17,
            shank: SegmentParams {
                mass_kg: 3.7075,
                inertia_kgm2: 0.0504,
            },
            shank_length_m: 0.43,
            shank_com_m: 0.18,
            foot: SegmentParams {
                mass_kg: 1.5666,
                inertia_kgm2: 0.0069,
            },
            foot_com_m: [0.04, -0.03],
            heel_m: [-0.06, -0.05],
            toe_m: [0.14, -0.05],
            contact_radius_m: 0.03,
            exo_thigh: SegmentParams {
                mass_kg: 0.5,
                inertia_kgm2: 0.01,
            },
            exo_com_m: 0.15,
            gravity_mps2: 9.794,
        }
    }
}

/// Segment indices in the order used by the inertia bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    UpperBody,
    Thigh,
    Shank,
    Foot,
    ExoThigh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Hip,
    Knee,
    Ankle,
}

impl Joint {
    pub const ALL: [Joint; 3] = [Joint::Hip, Joint::Knee, Joint::Ankle];

    /// Generalized coordinate of this joint on the right leg; the left leg is
    /// offset by four.
    pub fn coordinate(self, side: crate::muscle::Side) -> usize {
        let base = match self {
            Joint::Hip => 3,
            Joint::Knee => 4,
            Joint::Ankle => 5,
        };
        base + 4 * side.index()
    }

    pub fn name(self) -> &'static str {
        match self {
            Joint::Hip => "hip",
            Joint::Knee => "knee",
            Joint::Ankle => "ankle",
        }
    }

    /// Segments on either side of the joint, proximal first.
    pub fn segments(self) -> (Segment, Segment) {
        match self {
            Joint::Hip => (Segment::UpperBody, Segment::Thigh),
            Joint::Knee => (Segment::Thigh, Segment::Shank),
            Joint::Ankle => (Segment::Shank, Segment::Foot),
        }
    }

    pub fn between(a: Segment, b: Segment) -> Option<Joint> {
        Joint::ALL.into_iter().find(|j| j.segments() == (a, b))
    }
}

impl Segment {
    pub fn from_name(s: &str) -> Option<Segment> {
        Some(match s {
            "upper_body" => Segment::UpperBody,
            "thigh" => Segment::Thigh,
            "shank" => Segment::Shank,
            "foot" => Segment::Foot,
            "exo_thigh" => Segment::ExoThigh,
            _ => return None,
        })
    }
}

impl BodyParams {
    pub fn segment(&self, s: Segment) -> &SegmentParams {
        match s {
            Segment::UpperBody => &self.upper_body,
            Segment::Thigh => &self.thigh,
            Segment::Shank => &self.shank,
            Segment::Foot => &self.foot,
            Segment::ExoThigh => &self.exo_thigh,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.upper_body.mass_kg
            + 2.0
                * (self.thigh.mass_kg
                    + self.shank.mass_kg
                    + self.foot.mass_kg
                    + self.exo_thigh.mass_kg)
    }

    /// Position of `joint` in the centre-of-mass frame of `seg`.
    pub fn joint_in_segment(&self, joint: Joint, seg: Segment) -> Option<[f64; 2]> {
        let p = match (joint, seg) {
            (Joint::Hip, Segment::UpperBody) => [0.0, -self.upper_body_com_m],
            (Joint::Hip, Segment::Thigh) => [0.0, self.thigh_com_m],
            (Joint::Knee, Segment::Thigh) => [0.0, self.thigh_com_m - self.thigh_length_m],
            (Joint::Knee, Segment::Shank) => [0.0, self.shank_com_m],
            (Joint::Ankle, Segment::Shank) => [0.0, self.shank_com_m - self.shank_length_m],
            (Joint::Ankle, Segment::Foot) => [-self.foot_com_m[0], -self.foot_com_m[1]],
            _ => return None,
        };
        Some(p)
    }

    /// Hip height above flat ground in the neutral pose with both spheres
    /// just touching.
    pub fn standing_hip_height(&self) -> f64 {
        self.thigh_length_m + self.shank_length_m - self.heel_m[1].min(self.toe_m[1])
            + self.contact_radius_m
    }

    pub fn validate(&self) -> Result<()> {
        let segs = [
            ("upper_body", &self.upper_body),
            ("thigh", &self.thigh),
            ("shank", &self.shank),
            ("foot", &self.foot),
            ("exo_thigh", &self.exo_thigh),
        ];
        for (name, s) in segs {
            positive(&format!("body.{name}.mass_kg"), s.mass_kg)?;
            positive(&format!("body.{name}.inertia_kgm2"), s.inertia_kgm2)?;
        }
        positive("body.thigh_length_m", self.thigh_length_m)?;
        positive("body.shank_length_m", self.shank_length_m)?;
        positive("body.contact_radius_m", self.contact_radius_m)?;
        positive("body.gravity_mps2", self.gravity_mps2)?;
        for (key, v) in [
            ("body.upper_body_com_m", self.upper_body_com_m),
            ("body.thigh_com_m", self.thigh_com_m),
            ("body.shank_com_m", self.shank_com_m),
            ("body.exo_com_m", self.exo_com_m),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::config(key, format!("{v} must be finite and >= 0")));
            }
        }
        for (key, p) in [
            ("body.foot_com_m", self.foot_com_m),
            ("body.heel_m", self.heel_m),
            ("body.toe_m", self.toe_m),
        ] {
            if !p.iter().all(|x| x.is_finite()) {
                return Err(SimError::config(key, "coordinates must be finite"));
            }
        }
        Ok(())
    }
}

pub fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SimError::config(key, format!("{v} must be finite and > 0")))
    }
}
