//! The closed loop: skeleton, muscles, ground contact and exoskeleton
//! advanced together under reflex control.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use super::body::BodyParams;
use super::contact::{sphere_contact, ContactParams, Ground, SphereContact};
use super::dynamics::{eom_terms, forward_dynamics, forward_dynamics_augmented};
use super::forces::{generalized_forces, interaction_torque, InteractionParams, JointLimitParams};
use super::integrate::rk4_step;
use super::kinematics::{
    ankle_index, exo_index, hip_index, knee_index, Kinematics, MatQ, VecQ, IPITCH, IX, IY, NQ,
};
use super::log::LogRow;
use crate::error::{Result, SimError};
use crate::geometry::{aggregate_torques, muscle_torque, JointTorqueVector, MuscleGeometry};
use crate::muscle::hill::{self, init_fiber_length, SolverSettings};
use crate::muscle::metabolic::{metabolic_rates, MetabolicParams};
use crate::muscle::{
    activation_rate, CurveSet, MuscleId, MuscleKind, MuscleParams, MuscleState, Side, MUSCLE_COUNT,
};
use crate::reflex::{
    excitations, FootObservation, GaitPhase, LegInputs, PhaseClassifier, PhaseObservation,
    PhaseRules, ReflexInputs, ReflexParams,
};

/// q, q̇, activations, normalized fiber lengths.
pub const NX: usize = 2 * NQ + 2 * MUSCLE_COUNT;
pub type StateVec = SVector<f64, NX>;

const ACT: usize = 2 * NQ;
const FIB: usize = ACT + MUSCLE_COUNT;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    /// Reflex update period, s.
    pub controller_dt_s: f64,
    /// Integration substeps per controller period.
    pub substeps: usize,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            controller_dt_s: 0.005,
            substeps: 10,
        }
    }
}

impl Timing {
    pub fn substep(&self) -> f64 {
        self.controller_dt_s / self.substeps as f64
    }

    pub fn validate(&self) -> Result<()> {
        super::body::positive("timing.controller_dt_s", self.controller_dt_s)?;
        if self.substeps == 0 {
            return Err(SimError::config("timing.substeps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Starting posture. Angles are joint angles in radians, right leg first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPose {
    pub pitch_rad: f64,
    pub hip_rad: [f64; 2],
    pub knee_rad: [f64; 2],
    pub ankle_rad: [f64; 2],
    /// Depth of the lowest contact sphere at t = 0.
    pub penetration_m: f64,
    pub activation: f64,
}

impl Default for InitialPose {
    /// Double support with the right foot ahead.
    fn default() -> Self {
        Self {
            pitch_rad: 0.0,
            hip_rad: [0.2, -0.2],
            knee_rad: [0.0, 0.0],
            ankle_rad: [-0.2, 0.2],
            penetration_m: 2e-3,
            activation: 0.05,
        }
    }
}

impl InitialPose {
    pub fn neutral() -> Self {
        Self {
            hip_rad: [0.0; 2],
            ankle_rad: [0.0; 2],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let angles = [
            ("initial.pitch_rad", &[self.pitch_rad][..]),
            ("initial.hip_rad", &self.hip_rad[..]),
            ("initial.knee_rad", &self.knee_rad[..]),
            ("initial.ankle_rad", &self.ankle_rad[..]),
        ];
        for (key, values) in angles {
            if values.iter().any(|a| !a.is_finite() || a.abs() > 1.5) {
                return Err(SimError::config(key, "angles must be finite and within ±1.5 rad"));
            }
        }
        if !(0.0..=0.02).contains(&self.penetration_m) {
            return Err(SimError::config("initial.penetration_m", "must lie in [0, 0.02]"));
        }
        if !(0.0..=1.0).contains(&self.activation) {
            return Err(SimError::config("initial.activation", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Input handed to an exoskeleton torque law.
pub struct ExoInput<'a> {
    pub t: f64,
    pub q: &'a VecQ,
    pub qd: &'a VecQ,
    pub phases: [GaitPhase; 2],
}

/// Assistive torque law of the exoskeleton hip motors, (right, left), N·m.
pub trait ExoTorque: Send + Sync {
    fn torque(&self, input: &ExoInput<'_>) -> [f64; 2];
}

/// Unpowered exoskeleton.
#[derive(Clone, Copy, Debug, Default)]
pub struct PassiveExo;

impl ExoTorque for PassiveExo {
    fn torque(&self, _: &ExoInput<'_>) -> [f64; 2] {
        [0.0; 2]
    }
}

/// All immutable model data a rollout needs.
#[derive(Clone, Debug)]
pub struct PlantModel {
    pub body: BodyParams,
    pub contact: ContactParams,
    pub interaction: InteractionParams,
    pub limits: JointLimitParams,
    /// Indexed by `MuscleKind`; both legs share parameters.
    pub muscles: [MuscleParams; 7],
    pub curves: CurveSet,
    pub geometry: MuscleGeometry,
    pub solver: SolverSettings,
    pub metabolic: MetabolicParams,
    pub phase_rules: PhaseRules,
    pub timing: Timing,
    pub ground: Ground,
}

/// Everything computed while evaluating the state derivative once.
#[derive(Clone, Debug)]
pub struct PlantEval {
    pub muscles: [MuscleState; MUSCLE_COUNT],
    pub joint_torques: JointTorqueVector,
    /// Right heel, right toe, left heel, left toe.
    pub contacts: [SphereContact; 4],
    pub exo: [f64; 2],
    pub interaction: [f64; 2],
    /// Knee stop torques, (right, left), N·m.
    pub knee_stop: [f64; 2],
    pub qdd: VecQ,
}

impl PlantEval {
    pub fn normal_load(&self, side: Side) -> f64 {
        let s = side.index();
        self.contacts[2 * s].normal + self.contacts[2 * s + 1].normal
    }
}

impl PlantModel {
    pub fn with_defaults(slope: f64) -> Result<Self> {
        let body = BodyParams::default();
        let geometry = MuscleGeometry::default_for(&body)?;
        Ok(Self {
            body,
            contact: ContactParams::default(),
            interaction: InteractionParams::default(),
            limits: JointLimitParams::default(),
            muscles: MuscleKind::ALL.map(MuscleParams::reference),
            curves: CurveSet::default(),
            geometry,
            solver: SolverSettings::default(),
            metabolic: MetabolicParams::default(),
            phase_rules: PhaseRules::default(),
            timing: Timing::default(),
            ground: Ground::new(slope),
        })
    }

    /// Range-check every parameter group.
    pub fn validate(&self) -> Result<()> {
        self.body.validate()?;
        self.contact.validate()?;
        self.interaction.validate()?;
        self.limits.validate()?;
        for kind in MuscleKind::ALL {
            self.muscles[kind.index()].validate(&format!("muscles.{}", kind.name().to_lowercase()))?;
        }
        self.solver.validate()?;
        self.metabolic.validate()?;
        self.phase_rules.validate()?;
        self.timing.validate()?;
        if !self.ground.slope.is_finite() || self.ground.slope.abs() > 1.0 {
            return Err(SimError::config("scenario.slope", format!("{} outside [-1, 1]", self.ground.slope)));
        }
        Ok(())
    }

    pub fn muscle(&self, id: MuscleId) -> &MuscleParams {
        &self.muscles[id.kind.index()]
    }

    fn leg_angles(q: &VecQ, side: Side) -> [f64; 3] {
        [q[hip_index(side)], q[knee_index(side)], q[ankle_index(side)]]
    }

    pub fn muscle_states(&self, x: &StateVec, guesses: &mut [f64; MUSCLE_COUNT]) -> Result<[MuscleState; MUSCLE_COUNT]> {
        let q = VecQ::from_fn(|i, _| x[i]);
        let mut out = [MuscleState::default(); MUSCLE_COUNT];
        for id in MuscleId::all() {
            let i = id.index();
            let path = self.geometry.evaluate(id, Self::leg_angles(&q, id.side))?;
            let st = hill::evaluate(
                id.kind.name(),
                x[ACT + i],
                x[FIB + i],
                path.length,
                guesses[i],
                &self.curves,
                self.muscle(id),
                &self.solver,
            )
            .map_err(|e| match e {
                SimError::FiberSolve { residual, iterations, .. } => SimError::FiberSolve {
                    muscle: id.label(),
                    residual,
                    iterations,
                },
                other => other,
            })?;
            guesses[i] = st.fiber_velocity;
            out[i] = st;
        }
        Ok(out)
    }

    /// State derivative for held excitations `sigma`. `h_implicit` is the
    /// integration step over which the strap damping is treated implicitly.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        &self,
        t: f64,
        x: &StateVec,
        sigma: &[f64; MUSCLE_COUNT],
        phases: [GaitPhase; 2],
        exo: &dyn ExoTorque,
        guesses: &mut [f64; MUSCLE_COUNT],
        h_implicit: f64,
    ) -> Result<(StateVec, PlantEval)> {
        let q = VecQ::from_fn(|i, _| x[i]);
        let qd = VecQ::from_fn(|i, _| x[NQ + i]);
        let kin = Kinematics::new(&self.body, &q, &qd);

        let muscles = self.muscle_states(x, guesses)?;
        let mut torques = Vec::with_capacity(2 * MUSCLE_COUNT);
        for id in MuscleId::all() {
            let st = &muscles[id.index()];
            let path = self.geometry.evaluate(id, Self::leg_angles(&q, id.side))?;
            for (joint, arm) in path.spanned() {
                torques.push((id.side, joint, muscle_torque(st.fiber_force, st.pennation, arm)));
            }
        }
        let joint_torques = aggregate_torques(torques);

        let r = self.body.contact_radius_m;
        let contacts: [SphereContact; 4] = std::array::from_fn(|k| {
            let side = if k < 2 { Side::Right } else { Side::Left };
            let local = if k % 2 == 0 { self.body.heel_m } else { self.body.toe_m };
            sphere_contact(&kin, Kinematics::foot(side), local, r, &self.ground, &self.contact)
        });

        let exo_tau = exo.torque(&ExoInput {
            t,
            q: &q,
            qd: &qd,
            phases,
        });
        let (k_int, d_int) = (self.interaction.k_per_rad(), self.interaction.d_per_rad());
        let mut interaction = Side::BOTH.map(|s| {
            interaction_torque(q[exo_index(s)], qd[exo_index(s)], k_int, d_int)
        });
        let knee_stop = Side::BOTH.map(|s| self.limits.knee_torque(q[knee_index(s)], qd[knee_index(s)]));
        let mut q_gen = generalized_forces(&joint_torques, exo_tau, interaction, &contacts);
        for s in Side::BOTH {
            q_gen[knee_index(s)] += knee_stop[s.index()];
        }
        let terms = eom_terms(&kin);
        let implicit = self.interaction.implicit_damping && h_implicit > 0.0;
        let qdd = if implicit {
            // τ_d = d (q̇_e + h q̈_e): the q̈_e part moves to the left-hand side.
            let mut aug = MatQ::zeros();
            let dh = d_int * h_implicit;
            for s in Side::BOTH {
                let (h, e) = (hip_index(s), exo_index(s));
                aug[(e, e)] += dh;
                aug[(h, e)] -= dh;
            }
            let qdd = forward_dynamics_augmented(&terms, &aug, &q_gen, t)?;
            for s in Side::BOTH {
                interaction[s.index()] += dh * qdd[exo_index(s)];
            }
            qdd
        } else {
            forward_dynamics(&terms, &q_gen, t)?
        };

        let mut dx = StateVec::zeros();
        for i in 0..NQ {
            dx[i] = qd[i];
            dx[NQ + i] = qdd[i];
        }
        for id in MuscleId::all() {
            let i = id.index();
            let p = self.muscle(id);
            dx[ACT + i] = activation_rate(x[ACT + i], sigma[i], p.tau_act, p.tau_deact);
            dx[FIB + i] = p.v_max * muscles[i].fiber_velocity;
        }
        Ok((
            dx,
            PlantEval {
                muscles,
                joint_torques,
                contacts,
                exo: exo_tau,
                interaction,
                knee_stop,
                qdd,
            },
        ))
    }

    /// Keep activations in [a_min, 1] and fibers above their floor.
    fn clamp_state(&self, x: &mut StateVec) {
        for id in MuscleId::all() {
            let i = id.index();
            let p = self.muscle(id);
            x[ACT + i] = x[ACT + i].clamp(p.a_min, 1.0);
            x[FIB + i] = x[FIB + i].max(p.min_fiber_length());
        }
    }

    /// Initial state for `pose` moving along the ground at `speed`.
    pub fn initial_state(&self, pose: &InitialPose, speed: f64) -> StateVec {
        let mut q = VecQ::zeros();
        q[IPITCH] = pose.pitch_rad;
        for s in Side::BOTH {
            let i = s.index();
            q[hip_index(s)] = pose.hip_rad[i];
            q[knee_index(s)] = pose.knee_rad[i];
            q[ankle_index(s)] = pose.ankle_rad[i];
        }
        let kin = Kinematics::new(&self.body, &q, &VecQ::zeros());
        let r = self.body.contact_radius_m;
        let lowest = Side::BOTH
            .into_iter()
            .flat_map(|s| {
                [self.body.heel_m, self.body.toe_m]
                    .map(|p| self.ground.clearance(kin.point(Kinematics::foot(s), p).pos))
            })
            .fold(f64::INFINITY, f64::min);
        let nu = self.ground.slope;
        q[IY] = (r - pose.penetration_m - lowest) * (1.0 + nu * nu).sqrt();

        let v = speed * self.ground.tangent();
        let mut x = StateVec::zeros();
        for i in 0..NQ {
            x[i] = q[i];
        }
        x[NQ + IX] = v.x;
        x[NQ + IY] = v.y;
        for id in MuscleId::all() {
            let i = id.index();
            let p = self.muscle(id);
            let a = pose.activation.clamp(p.a_min, 1.0);
            let len = self
                .geometry
                .evaluate(id, Self::leg_angles(&q, id.side))
                .map(|e| e.length)
                .unwrap_or(p.l_slack + p.l_opt);
            x[ACT + i] = a;
            x[FIB + i] = init_fiber_length(len, a, &self.curves, p);
        }
        x
    }

    /// Hip height above the ground counted as a fall.
    pub fn fall_height(&self) -> f64 {
        0.7 * self.body.standing_hip_height()
    }
}

/// How a rollout ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Fell { t: f64 },
    Aborted { t: f64, reason: String },
}

impl Termination {
    pub fn fell(&self) -> bool {
        !matches!(self, Termination::Completed)
    }
}

/// One rollout in progress.
pub struct Simulation<'a> {
    model: &'a PlantModel,
    params: ReflexParams,
    exo: &'a dyn ExoTorque,
    step_count: usize,
    x: StateVec,
    guesses: [f64; MUSCLE_COUNT],
    classifier: PhaseClassifier,
    sigma: [f64; MUSCLE_COUNT],
    current: PlantEval,
}

impl<'a> Simulation<'a> {
    pub fn new(
        model: &'a PlantModel,
        params: ReflexParams,
        exo: &'a dyn ExoTorque,
        pose: &InitialPose,
        speed: f64,
    ) -> Result<Self> {
        let x = model.initial_state(pose, speed);
        Self::from_state(model, params, exo, x)
    }

    pub fn from_state(
        model: &'a PlantModel,
        params: ReflexParams,
        exo: &'a dyn ExoTorque,
        x: StateVec,
    ) -> Result<Self> {
        let mut guesses = [0.0; MUSCLE_COUNT];
        let sigma = std::array::from_fn(|i| x[ACT + i]);
        let h = model.timing.substep();
        let phases = [GaitPhase::LateStance; 2];
        let (_, current) = model.evaluate(0.0, &x, &sigma, phases, exo, &mut guesses, h)?;
        let obs = observe(model, &x, &current);
        let classifier = PhaseClassifier::from_observation(model.phase_rules, &obs);
        Ok(Self {
            model,
            params,
            exo,
            step_count: 0,
            x,
            guesses,
            classifier,
            sigma,
            current,
        })
    }

    pub fn time(&self) -> f64 {
        self.step_count as f64 * self.model.timing.controller_dt_s
    }

    pub fn state(&self) -> &StateVec {
        &self.x
    }

    pub fn phases(&self) -> [GaitPhase; 2] {
        self.classifier.phases()
    }

    pub fn current(&self) -> &PlantEval {
        &self.current
    }

    pub fn hip_clearance(&self) -> f64 {
        self.model.ground.height(nalgebra::Vector2::new(self.x[IX], self.x[IY]))
    }

    pub fn has_fallen(&self) -> bool {
        !(self.hip_clearance() >= self.model.fall_height())
    }

    pub fn com(&self) -> (nalgebra::Vector2<f64>, nalgebra::Vector2<f64>) {
        let q = VecQ::from_fn(|i, _| self.x[i]);
        let qd = VecQ::from_fn(|i, _| self.x[NQ + i]);
        Kinematics::new(&self.model.body, &q, &qd).system_com()
    }

    fn reflex_inputs(&self) -> ReflexInputs {
        let x = &self.x;
        let legs = Side::BOTH.map(|side| {
            let mut leg = LegInputs {
                knee_angle: -x[knee_index(side)],
                knee_rate: -x[NQ + knee_index(side)],
                ..Default::default()
            };
            for kind in MuscleKind::ALL {
                let id = MuscleId::new(side, kind);
                let st = &self.current.muscles[id.index()];
                leg.length[kind.index()] = st.fiber_length;
                leg.force[kind.index()] = st.tendon_force / self.model.muscle(id).f_opt;
            }
            leg
        });
        ReflexInputs {
            trunk_angle: x[IPITCH],
            trunk_rate: x[NQ + IPITCH],
            legs,
            phases: self.classifier.phases(),
        }
    }

    /// One controller period: sample reflexes, hold the excitations over the
    /// integration substeps, then update the gait phases. Returns the log row
    /// describing the state at the start of the period.
    pub fn step(&mut self) -> Result<LogRow> {
        let model = self.model;
        self.sigma = excitations(&self.params, &self.reflex_inputs());
        let row = self.log_row();
        let phases = self.classifier.phases();
        let h = model.timing.substep();
        let exo = self.exo;
        let sigma = self.sigma;
        for j in 0..model.timing.substeps {
            let t = (self.step_count * model.timing.substeps + j) as f64 * h;
            let guesses = &mut self.guesses;
            let mut next = rk4_step(t, &self.x, h, |t, x| {
                model
                    .evaluate(t, x, &sigma, phases, exo, guesses, h)
                    .map(|(dx, _)| dx)
            })?;
            model.clamp_state(&mut next);
            self.x = next;
        }
        self.step_count += 1;
        let t = self.time();
        let (_, current) =
            model.evaluate(t, &self.x, &sigma, phases, exo, &mut self.guesses, h)?;
        self.current = current;
        let obs = observe(model, &self.x, &self.current);
        self.classifier.update(&obs);
        Ok(row)
    }

    fn log_row(&self) -> LogRow {
        let x = &self.x;
        let m = self.model;
        let cur = &self.current;
        let metabolic: f64 = MuscleId::all()
            .map(|id| metabolic_rates(&cur.muscles[id.index()], m.muscle(id), &m.curves, &m.metabolic).total())
            .sum();
        let (com, com_vel) = self.com();
        let mut grf = [0.0; 8];
        for (k, c) in cur.contacts.iter().enumerate() {
            grf[2 * k] = c.friction;
            grf[2 * k + 1] = c.normal;
        }
        let q = VecQ::from_fn(|i, _| x[i]);
        let kin = Kinematics::new(&m.body, &q, &VecQ::zeros());
        let heel_x = Side::BOTH.map(|s| kin.point(Kinematics::foot(s), m.body.heel_m).pos.x);
        LogRow {
            t: self.time(),
            q: std::array::from_fn(|i| x[i]),
            qd: std::array::from_fn(|i| x[NQ + i]),
            sigma: self.sigma,
            activation: std::array::from_fn(|i| x[ACT + i]),
            fiber_force: std::array::from_fn(|i| cur.muscles[i].fiber_force),
            grf,
            joint_torque: cur.joint_torques.as_array(),
            interaction: cur.interaction,
            phases: self.classifier.phases(),
            metabolic_w: metabolic,
            com: [com.x, com.y],
            com_vel: [com_vel.x, com_vel.y],
            heel_x,
        }
    }
}

fn observe(model: &PlantModel, x: &StateVec, eval: &PlantEval) -> PhaseObservation {
    let q = VecQ::from_fn(|i, _| x[i]);
    let kin = Kinematics::new(&model.body, &q, &VecQ::zeros());
    PhaseObservation {
        pelvis_x: x[IX],
        feet: Side::BOTH.map(|s| FootObservation {
            grf_normal: eval.normal_load(s),
            ankle_x: kin.leg(s).ankle.x,
        }),
    }
}

/// Outcome of running a rollout to its horizon or first fall.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub rows: Vec<LogRow>,
    pub termination: Termination,
    /// Whole-body centre of mass x at the end of the rollout, m.
    pub final_com_x: f64,
}

/// Run controller steps until `horizon_s` elapses, the model falls, or the
/// integration fails.
pub fn rollout(
    model: &PlantModel,
    params: ReflexParams,
    exo: &dyn ExoTorque,
    pose: &InitialPose,
    speed: f64,
    horizon_s: f64,
) -> Rollout {
    let steps = (horizon_s / model.timing.controller_dt_s).round() as usize;
    let mut rows = Vec::with_capacity(steps);
    let mut sim = match Simulation::new(model, params, exo, pose, speed) {
        Ok(s) => s,
        Err(e) => {
            return Rollout {
                rows,
                termination: Termination::Aborted {
                    t: 0.0,
                    reason: e.to_string(),
                },
                final_com_x: 0.0,
            }
        }
    };
    let mut termination = Termination::Completed;
    for _ in 0..steps {
        match sim.step() {
            Ok(row) => rows.push(row),
            Err(e) => {
                termination = Termination::Aborted {
                    t: sim.time(),
                    reason: e.to_string(),
                };
                break;
            }
        }
        if sim.has_fallen() {
            // Keep the fallen state so a saved log shows the fall.
            rows.push(sim.log_row());
            termination = Termination::Fell { t: sim.time() };
            break;
        }
    }
    Rollout {
        rows,
        termination,
        final_com_x: sim.com().0.x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> PlantModel {
        PlantModel::with_defaults(0.0).unwrap()
    }

    #[test]
    fn state_layout() {
        assert_eq!(NX, 50);
        assert_eq!(FIB + MUSCLE_COUNT, NX);
    }

    #[test]
    fn initial_state_touches_ground_lightly() {
        let m = model();
        let x = m.initial_state(&InitialPose::default(), 1.0);
        let sim = Simulation::from_state(&m, ReflexParams::default(), &PassiveExo, x).unwrap();
        let cur = sim.current();
        let deepest = cur.contacts.iter().map(|c| c.depth).fold(0.0, f64::max);
        assert!((deepest - 2e-3).abs() < 1e-9);
        assert_eq!(x[NQ + IX], 1.0);
        assert_eq!(sim.phases(), [GaitPhase::EarlyStance, GaitPhase::LateStance]);
    }

    #[test]
    fn neutral_pose_starts_in_late_stance() {
        let m = model();
        let sim = Simulation::new(&m, ReflexParams::default(), &PassiveExo, &InitialPose::neutral(), 0.0).unwrap();
        assert_eq!(sim.phases(), [GaitPhase::LateStance; 2]);
        assert!((sim.hip_clearance() - (m.body.standing_hip_height() - 2e-3)).abs() < 1e-9);
    }

    #[test]
    fn controller_step_advances_one_period() {
        let m = model();
        let mut sim = Simulation::new(&m, ReflexParams::default(), &PassiveExo, &InitialPose::default(), 1.0).unwrap();
        let row = sim.step().unwrap();
        assert_eq!(row.t, 0.0);
        assert!((sim.time() - 0.005).abs() < 1e-15);
        let row = sim.step().unwrap();
        assert!((row.t - 0.005).abs() < 1e-15);
    }

    #[test]
    fn rollouts_are_deterministic() {
        let m = model();
        let p = ReflexParams::default();
        let a = rollout(&m, p, &PassiveExo, &InitialPose::default(), 1.0, 0.2);
        let b = rollout(&m, p, &PassiveExo, &InitialPose::default(), 1.0, 0.2);
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.to_record(), rb.to_record());
        }
        assert_eq!(a.final_com_x.to_bits(), b.final_com_x.to_bits());
    }

    #[test]
    fn limp_model_falls() {
        let m = model();
        let p = ReflexParams::from_array(&[0.0; 29]);
        let r = rollout(&m, p, &PassiveExo, &InitialPose::neutral(), 0.0, 3.0);
        match r.termination {
            Termination::Fell { t } => assert!(t > 0.0 && t < 3.0),
            other => panic!("{other:?}"),
        }
        assert!(r.rows.len() < 600);
        assert!(r.rows.last().unwrap().q[IY] < m.fall_height());
    }

    #[test]
    fn strap_torques_stay_small_when_aligned() {
        let m = model();
        let mut sim = Simulation::new(&m, ReflexParams::default(), &PassiveExo, &InitialPose::default(), 1.0).unwrap();
        for _ in 0..40 {
            sim.step().unwrap();
        }
        let x = sim.state();
        for s in Side::BOTH {
            assert!(x[exo_index(s)].abs() < 0.01, "strut offset {}", x[exo_index(s)]);
        }
    }
}
