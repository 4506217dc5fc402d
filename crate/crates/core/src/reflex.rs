//! Phase-dependent muscle reflexes.
//!
//! Each leg runs through five gait phases; in every phase the excitation of a
//! muscle is a rectified combination of length, force and trunk-posture
//! feedback plus constant stimulations.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::muscle::{MuscleKind, Side, MUSCLE_COUNT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GaitPhase {
    EarlyStance,
    LateStance,
    Liftoff,
    EarlySwing,
    Landing,
}

impl GaitPhase {
    pub const ALL: [GaitPhase; 5] = [
        GaitPhase::EarlyStance,
        GaitPhase::LateStance,
        GaitPhase::Liftoff,
        GaitPhase::EarlySwing,
        GaitPhase::Landing,
    ];

    /// Successor in the gait cycle.
    pub fn next(self) -> GaitPhase {
        match self {
            GaitPhase::EarlyStance => GaitPhase::LateStance,
            GaitPhase::LateStance => GaitPhase::Liftoff,
            GaitPhase::Liftoff => GaitPhase::EarlySwing,
            GaitPhase::EarlySwing => GaitPhase::Landing,
            GaitPhase::Landing => GaitPhase::EarlyStance,
        }
    }

    /// Stance in the control sense: early or late stance (liftoff is handled
    /// separately by every reflex).
    pub fn is_support(self) -> bool {
        matches!(self, GaitPhase::EarlyStance | GaitPhase::LateStance)
    }

    /// Whether the foot is expected on the ground.
    pub fn is_stance(self) -> bool {
        matches!(
            self,
            GaitPhase::EarlyStance | GaitPhase::LateStance | GaitPhase::Liftoff
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            GaitPhase::EarlyStance => "early_stance",
            GaitPhase::LateStance => "late_stance",
            GaitPhase::Liftoff => "liftoff",
            GaitPhase::EarlySwing => "early_swing",
            GaitPhase::Landing => "landing",
        }
    }

    pub fn from_label(s: &str) -> Option<GaitPhase> {
        GaitPhase::ALL.into_iter().find(|p| p.label() == s)
    }
}

/// Rectifier {x}₊ followed by the upper excitation bound.
#[inline]
pub fn rectify(x: f64) -> f64 {
    if x > 0.0 {
        x.min(1.0)
    } else {
        0.0
    }
}

macro_rules! reflex_params {
    ($( $field:ident : $lo:expr, $hi:expr, $doc:literal; )*) => {
        /// The 29 free reflex parameters.
        #[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ReflexParams {
            $( #[doc = $doc] pub $field: f64, )*
        }

        impl ReflexParams {
            pub const NAMES: [&'static str; 29] = [$( stringify!($field), )*];
            pub const LOWER: [f64; 29] = [$( $lo, )*];
            pub const UPPER: [f64; 29] = [$( $hi, )*];

            pub fn to_array(&self) -> [f64; 29] {
                [$( self.$field, )*]
            }

            pub fn from_array(w: &[f64; 29]) -> Self {
                let mut it = w.iter().copied();
                Self { $( $field: it.next().unwrap(), )* }
            }
        }
    };
}

reflex_params! {
    k_l_ta: 0.0, 10.0, "TA length feedback gain.";
    k_f_ta: 0.0, 10.0, "SOL force inhibition of TA.";
    k_f_sol: 0.0, 10.0, "SOL force feedback gain.";
    k_f_gas: 0.0, 10.0, "GAS force feedback gain.";
    k_f1_fem: 0.0, 10.0, "FEM force feedback in early stance.";
    k_f2_fem: 0.0, 10.0, "FEM force feedback in late stance.";
    k_q_ham: 0.0, 10.0, "HAM trunk angle gain, 1/rad.";
    k_dq_ham: 0.0, 10.0, "HAM trunk rate gain, s/rad.";
    k_f_ham: 0.0, 10.0, "GLU force to HAM gain in landing.";
    k_q_glu: 0.0, 10.0, "GLU trunk angle gain, 1/rad.";
    k_dq_glu: 0.0, 10.0, "GLU trunk rate gain, s/rad.";
    k_f_glu: 0.0, 10.0, "GLU force feedback in swing.";
    k_q1_ili: 0.0, 10.0, "ILI trunk angle gain in stance, 1/rad.";
    k_dq1_ili: 0.0, 10.0, "ILI trunk rate gain in stance, s/rad.";
    k_l1_ili: 0.0, 10.0, "ILI length feedback in swing.";
    k_q2_ili: 0.0, 10.0, "ILI trunk angle gain in swing, 1/rad.";
    k_dq2_ili: 0.0, 10.0, "ILI trunk rate gain in swing, s/rad.";
    k_l2_ili: 0.0, 10.0, "HAM length inhibition of ILI in swing.";
    l0_ta: 0.5, 1.5, "TA reference fiber length (normalized).";
    l0_ili: 0.5, 1.5, "ILI reference fiber length (normalized).";
    l0_ham: 0.5, 1.5, "HAM reference fiber length (normalized).";
    q0_ub: -0.3, 0.3, "Reference trunk pitch, rad.";
    q_knee_hat: 0.0, 1.5, "Knee flexion threshold of the FEM switch, rad.";
    c1_fem: 0.0, 10.0, "FEM constant stimulation in stance.";
    c2_fem: 0.0, 10.0, "FEM constant stimulation after late stance.";
    c_ham: 0.0, 10.0, "HAM constant stimulation.";
    c_glu: 0.0, 10.0, "GLU constant stimulation.";
    c1_ili: 0.0, 10.0, "ILI constant stimulation in stance.";
    c2_ili: 0.0, 10.0, "ILI constant stimulation in liftoff.";
}

/// Hand-tuned starting point for optimization.
pub const SEED_PARAMS: &str = include_str!("../data/seed_params.toml");

impl Default for ReflexParams {
    fn default() -> Self {
        toml::from_str(SEED_PARAMS).expect("bundled seed parameters parse")
    }
}

impl ReflexParams {
    pub const LEN: usize = 29;

    pub fn from_slice(w: &[f64]) -> Result<Self> {
        let arr: [f64; 29] = w.try_into().map_err(|_| SimError::Schema {
            what: "reflex parameter vector".into(),
            found: w.len().to_string(),
            expected: "29".into(),
        })?;
        Ok(Self::from_array(&arr))
    }

    /// Clamp every entry into its box.
    pub fn projected(&self) -> Self {
        let mut w = self.to_array();
        for (i, x) in w.iter_mut().enumerate() {
            *x = x.clamp(Self::LOWER[i], Self::UPPER[i]);
        }
        Self::from_array(&w)
    }

    /// Map into [0, 1]²⁹ by the parameter boxes.
    pub fn to_normalized(&self) -> [f64; 29] {
        let w = self.to_array();
        std::array::from_fn(|i| (w[i] - Self::LOWER[i]) / (Self::UPPER[i] - Self::LOWER[i]))
    }

    pub fn from_normalized(u: &[f64]) -> Self {
        let w: [f64; 29] =
            std::array::from_fn(|i| Self::LOWER[i] + u[i] * (Self::UPPER[i] - Self::LOWER[i]));
        Self::from_array(&w)
    }

    /// Range check for user-supplied values.
    pub fn validate(&self) -> Result<()> {
        for (i, x) in self.to_array().iter().enumerate() {
            if !x.is_finite() || *x < Self::LOWER[i] || *x > Self::UPPER[i] {
                return Err(SimError::ConfigValue {
                    key: format!("reflex.{}", Self::NAMES[i]),
                    reason: format!(
                        "{x} outside [{}, {}]",
                        Self::LOWER[i],
                        Self::UPPER[i]
                    ),
                });
            }
        }
        Ok(())
    }
}

/// FEM force-feedback switch: 1 unless the knee is flexed past the threshold
/// and still flexing.
pub fn knee_switch(q_knee: f64, dq_knee: f64, q_knee_hat: f64) -> f64 {
    if q_knee < q_knee_hat || dq_knee <= 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn excite_ta(l_ta: f64, l0_ta: f64, f_sol: f64, k_l: f64, k_f: f64) -> f64 {
    rectify(k_l * (l_ta - l0_ta) - k_f * f_sol)
}

/// SOL and GAS: positive force feedback while the leg is loaded.
pub fn excite_plantarflexor(f_self: f64, k_f: f64, phase: GaitPhase) -> f64 {
    if phase.is_stance() {
        rectify(k_f * f_self)
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
pub fn excite_fem(
    f_fem: f64,
    xi: f64,
    phase: GaitPhase,
    c1: f64,
    c2: f64,
    k_f1: f64,
    k_f2: f64,
) -> f64 {
    match phase {
        GaitPhase::EarlyStance => rectify(c1 + xi * k_f1 * f_fem),
        GaitPhase::LateStance => rectify(c1 + xi * k_f2 * f_fem),
        _ => rectify(c2),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn excite_ham(
    q_ub: f64,
    dq_ub: f64,
    q0_ub: f64,
    f_glu: f64,
    phase: GaitPhase,
    c: f64,
    k_q: f64,
    k_dq: f64,
    k_f: f64,
) -> f64 {
    match phase {
        GaitPhase::EarlyStance | GaitPhase::LateStance => {
            rectify(c - k_q * (q_ub - q0_ub) - k_dq * dq_ub)
        }
        GaitPhase::Liftoff | GaitPhase::EarlySwing => 0.0,
        GaitPhase::Landing => rectify(c + k_f * f_glu),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn excite_glu(
    q_ub: f64,
    dq_ub: f64,
    q0_ub: f64,
    f_glu: f64,
    phase: GaitPhase,
    c: f64,
    k_q: f64,
    k_dq: f64,
    k_f: f64,
) -> f64 {
    match phase {
        GaitPhase::EarlyStance | GaitPhase::LateStance => {
            rectify(c - k_q * (q_ub - q0_ub) - k_dq * dq_ub)
        }
        GaitPhase::Liftoff => 0.0,
        GaitPhase::EarlySwing | GaitPhase::Landing => rectify(k_f * f_glu),
    }
}

/// ILI excitation. The swing-phase trunk reference shares `q0_ub` with the
/// stance branch.
#[allow(clippy::too_many_arguments)]
pub fn excite_ili(
    q_ub: f64,
    dq_ub: f64,
    l_ili: f64,
    l_ham: f64,
    phase: GaitPhase,
    p: &ReflexParams,
) -> f64 {
    match phase {
        GaitPhase::EarlyStance | GaitPhase::LateStance => {
            rectify(p.c1_ili + p.k_q1_ili * (q_ub - p.q0_ub) + p.k_dq1_ili * dq_ub)
        }
        GaitPhase::Liftoff => rectify(p.c2_ili),
        GaitPhase::EarlySwing | GaitPhase::Landing => rectify(
            p.k_l1_ili * (l_ili - p.l0_ili)
                - p.k_q2_ili * (q_ub - p.q0_ub)
                - p.k_dq2_ili * dq_ub
                - p.k_l2_ili * (l_ham - p.l0_ham),
        ),
    }
}

/// Sensory state of one leg.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LegInputs {
    /// Fiber length over optimal length, indexed by `MuscleKind`.
    pub length: [f64; 7],
    /// Muscle force over optimal force, indexed by `MuscleKind`.
    pub force: [f64; 7],
    /// Knee flexion angle (flexion positive), rad.
    pub knee_angle: f64,
    pub knee_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflexInputs {
    /// Trunk pitch, counter-clockwise positive, rad.
    pub trunk_angle: f64,
    pub trunk_rate: f64,
    pub legs: [LegInputs; 2],
    pub phases: [GaitPhase; 2],
}

/// Excitations of the seven muscles of one leg, indexed by `MuscleKind`.
pub fn leg_excitations(
    p: &ReflexParams,
    leg: &LegInputs,
    phase: GaitPhase,
    q_ub: f64,
    dq_ub: f64,
) -> [f64; 7] {
    use MuscleKind::*;
    let l = |k: MuscleKind| leg.length[k.index()];
    let f = |k: MuscleKind| leg.force[k.index()];
    let xi = knee_switch(leg.knee_angle, leg.knee_rate, p.q_knee_hat);
    let mut out = [0.0; 7];
    out[Ta.index()] = excite_ta(l(Ta), p.l0_ta, f(Sol), p.k_l_ta, p.k_f_ta);
    out[Sol.index()] = excite_plantarflexor(f(Sol), p.k_f_sol, phase);
    out[Gas.index()] = excite_plantarflexor(f(Gas), p.k_f_gas, phase);
    out[Fem.index()] = excite_fem(f(Fem), xi, phase, p.c1_fem, p.c2_fem, p.k_f1_fem, p.k_f2_fem);
    out[Ham.index()] = excite_ham(
        q_ub, dq_ub, p.q0_ub, f(Glu), phase, p.c_ham, p.k_q_ham, p.k_dq_ham, p.k_f_ham,
    );
    out[Glu.index()] = excite_glu(
        q_ub, dq_ub, p.q0_ub, f(Glu), phase, p.c_glu, p.k_q_glu, p.k_dq_glu, p.k_f_glu,
    );
    out[Ili.index()] = excite_ili(q_ub, dq_ub, l(Ili), l(Ham), phase, p);
    out
}

/// Excitations of all fourteen muscles in `MuscleId` order.
pub fn excitations(p: &ReflexParams, inputs: &ReflexInputs) -> [f64; MUSCLE_COUNT] {
    let mut out = [0.0; MUSCLE_COUNT];
    for side in Side::BOTH {
        let s = side.index();
        let leg = leg_excitations(
            p,
            &inputs.legs[s],
            inputs.phases[s],
            inputs.trunk_angle,
            inputs.trunk_rate,
        );
        out[s * 7..s * 7 + 7].copy_from_slice(&leg);
    }
    out
}

/// Observed quantities the phase rules look at, for one leg.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FootObservation {
    /// Total normal ground force on heel and toe, N.
    pub grf_normal: f64,
    /// Horizontal ankle position, m.
    pub ankle_x: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseObservation {
    pub pelvis_x: f64,
    pub feet: [FootObservation; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseRules {
    /// Normal force above which a foot counts as loaded, N.
    pub contact_threshold_n: f64,
}

impl Default for PhaseRules {
    fn default() -> Self {
        Self {
            contact_threshold_n: 20.0,
        }
    }
}

impl PhaseRules {
    pub fn validate(&self) -> Result<()> {
        crate::plant::body::positive("phase_rules.contact_threshold_n", self.contact_threshold_n)
    }
}

/// Per-rollout gait phase tracker.
///
/// A leg only ever advances to the next phase of the cycle, and at most one
/// step per update, which keeps threshold noise from causing chatter.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseClassifier {
    rules: PhaseRules,
    phases: [GaitPhase; 2],
}

impl PhaseClassifier {
    pub fn new(rules: PhaseRules, phases: [GaitPhase; 2]) -> Self {
        Self { rules, phases }
    }

    /// Start from phases inferred from a single observation.
    pub fn from_observation(rules: PhaseRules, obs: &PhaseObservation) -> Self {
        let phases = std::array::from_fn(|s| {
            let foot = &obs.feet[s];
            let loaded = foot.grf_normal > rules.contact_threshold_n;
            match (loaded, obs.pelvis_x < foot.ankle_x) {
                (true, true) => GaitPhase::EarlyStance,
                (true, false) => GaitPhase::LateStance,
                (false, true) => GaitPhase::Landing,
                (false, false) => GaitPhase::EarlySwing,
            }
        });
        Self { rules, phases }
    }

    pub fn phases(&self) -> [GaitPhase; 2] {
        self.phases
    }

    pub fn rules(&self) -> &PhaseRules {
        &self.rules
    }

    /// Advance both legs given the latest observation. Both legs are judged
    /// against the phases from before this update.
    pub fn update(&mut self, obs: &PhaseObservation) -> [GaitPhase; 2] {
        let prev = self.phases;
        for s in 0..2 {
            let foot = &obs.feet[s];
            let other = 1 - s;
            let loaded = foot.grf_normal > self.rules.contact_threshold_n;
            let other_loaded = obs.feet[other].grf_normal > self.rules.contact_threshold_n;
            let advance = match prev[s] {
                GaitPhase::EarlyStance => obs.pelvis_x > foot.ankle_x,
                GaitPhase::LateStance => other_loaded && prev[other] == GaitPhase::EarlyStance,
                GaitPhase::Liftoff => !loaded,
                GaitPhase::EarlySwing => foot.ankle_x > obs.pelvis_x,
                GaitPhase::Landing => loaded,
            };
            if advance {
                self.phases[s] = prev[s].next();
            }
        }
        self.phases
    }
}
