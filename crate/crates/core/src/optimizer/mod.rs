//! Two-step reflex parameter search: walk as far as possible first, then
//! refine against the hybrid speed/posture/load/effort objective.

pub mod cmaes;
pub mod fitness;

use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cmaes::CmaEs;
pub use fitness::{fitness_j1, fitness_j2, FitnessConfig, J2Components};

use crate::error::{Result, SimError};
use crate::plant::{rollout, ExoTorque, InitialPose, PlantModel};
use crate::reflex::ReflexParams;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptStep {
    /// Maximize distance (J1).
    #[serde(rename = "step1")]
    Distance,
    /// Hybrid objective (J2).
    #[serde(rename = "step2")]
    Hybrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptStatus {
    Running,
    /// The first step ran out of generations before any particle reached
    /// the target distance.
    Step1Incomplete,
    Finished,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub lambda: usize,
    /// Initial step size in the normalized parameter space.
    pub sigma0: f64,
    pub step1_generations: usize,
    /// Zero stops the search as soon as the first step succeeds.
    pub step2_generations: usize,
    pub seed: u64,
    /// Weight of the squared distance outside the parameter box.
    pub bound_penalty: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lambda: 13,
            sigma0: 0.01,
            step1_generations: 200,
            step2_generations: 50,
            seed: 0,
            bound_penalty: 1e3,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 2 {
            return Err(SimError::config("optimizer.lambda", "must be at least 2"));
        }
        if self.step1_generations == 0 {
            return Err(SimError::config("optimizer.step1_generations", "must be at least 1"));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0 && self.sigma0 <= 1.0) {
            return Err(SimError::config("optimizer.sigma0", "must lie in (0, 1]"));
        }
        if !(self.bound_penalty.is_finite() && self.bound_penalty >= 0.0) {
            return Err(SimError::config("optimizer.bound_penalty", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Fitness of a parameter set for the given step. Lower is better; in
/// the first step values below zero mean the target distance was reached.
pub trait Evaluator: Sync {
    fn evaluate(&self, params: &ReflexParams, step: OptStep) -> f64;
}

/// Evaluates candidates by simulating a scenario.
pub struct RolloutEvaluator<'a> {
    pub model: &'a PlantModel,
    pub exo: &'a dyn ExoTorque,
    pub pose: InitialPose,
    pub speed: f64,
    pub horizon_s: f64,
    pub fitness: FitnessConfig,
}

impl Evaluator for RolloutEvaluator<'_> {
    fn evaluate(&self, params: &ReflexParams, step: OptStep) -> f64 {
        let r = rollout(self.model, *params, self.exo, &self.pose, self.speed, self.horizon_s);
        let slope = self.model.ground.slope;
        match step {
            OptStep::Distance => fitness_j1(r.final_com_x, self.fitness.psi_m, slope),
            OptStep::Hybrid => {
                fitness_j2(
                    &r.rows,
                    r.termination.fell(),
                    r.final_com_x,
                    slope,
                    self.speed,
                    self.model.timing.controller_dt_s,
                    &self.fitness,
                )
                .total
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: ReflexParams,
    pub fitness: f64,
    pub generation: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub step: OptStep,
    pub best: f64,
    pub median: f64,
    pub sigma: f64,
    pub best_so_far: f64,
}

/// Resumable optimizer state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptState {
    pub schema_version: u32,
    pub config: OptimizerConfig,
    pub step: OptStep,
    pub cma: CmaEs,
    /// Generations completed in the current step.
    pub generation: usize,
    pub total_generations: usize,
    /// Best candidate of the current step.
    pub best: Option<Candidate>,
    /// Particle that ended the first step.
    pub step1_result: Option<Candidate>,
    pub status: OptStatus,
    pub history: Vec<GenerationRecord>,
}

fn project(u: &DVector<f64>) -> (Vec<f64>, f64) {
    let p: Vec<f64> = u.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let d2 = u.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
    (p, d2)
}

impl OptState {
    pub fn new(config: OptimizerConfig, initial: &ReflexParams) -> Result<Self> {
        config.validate()?;
        let mean = initial.projected().to_normalized();
        Ok(Self {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            config,
            step: OptStep::Distance,
            cma: CmaEs::new(&mean, config.sigma0, config.lambda, config.seed)?,
            generation: 0,
            total_generations: 0,
            best: None,
            step1_result: None,
            status: OptStatus::Running,
            history: Vec::new(),
        })
    }

    pub fn best_params(&self) -> Option<ReflexParams> {
        self.best.as_ref().map(|c| c.params)
    }

    /// Evaluate one generation and update the search. Candidates are
    /// evaluated in parallel and reduced in candidate order.
    pub fn run_generation<E: Evaluator>(&mut self, evaluator: &E) -> Result<GenerationRecord> {
        if self.status != OptStatus::Running {
            return Err(SimError::config("optimizer", "search already finished"));
        }
        let step = self.step;
        let xs = self.cma.ask();
        let evals: Vec<(ReflexParams, f64, f64)> = xs
            .par_iter()
            .map(|u| {
                let (p, d2) = project(u);
                let params = ReflexParams::from_normalized(&p).projected();
                let raw = evaluator.evaluate(&params, step);
                let raw = if raw.is_nan() { f64::INFINITY } else { raw };
                (params, raw, raw + self.config.bound_penalty * d2)
            })
            .collect();
        let gen = self.total_generations;

        let (best_i, best_raw) = evals
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.1))
            .fold((0, f64::INFINITY), |acc, (i, f)| if f < acc.1 { (i, f) } else { acc });
        if self.best.as_ref().is_none_or(|b| best_raw < b.fitness) {
            self.best = Some(Candidate {
                params: evals[best_i].0,
                fitness: best_raw,
                generation: gen,
            });
        }
        let mut sorted: Vec<f64> = evals.iter().map(|e| e.2).collect();
        sorted.sort_by(f64::total_cmp);
        let record = GenerationRecord {
            generation: gen,
            step,
            best: best_raw,
            median: sorted[sorted.len() / 2],
            sigma: self.cma.sigma,
            best_so_far: self.best.as_ref().map_or(f64::INFINITY, |b| b.fitness),
        };
        self.history.push(record.clone());
        self.total_generations += 1;
        self.generation += 1;

        if step == OptStep::Distance && best_raw < 0.0 {
            let trigger = self.best.clone().expect("best recorded above");
            self.step1_result = Some(trigger.clone());
            if self.config.step2_generations == 0 {
                self.status = OptStatus::Finished;
            } else {
                self.step = OptStep::Hybrid;
                self.generation = 0;
                self.best = None;
                let mean = trigger.params.to_normalized();
                self.cma = CmaEs::new(
                    &mean,
                    self.config.sigma0,
                    self.config.lambda,
                    self.config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
                )?;
            }
            return Ok(record);
        }

        let fitness: Vec<f64> = evals.iter().map(|e| e.2).collect();
        self.cma.tell(&fitness)?;
        match step {
            OptStep::Distance if self.generation >= self.config.step1_generations => {
                self.status = OptStatus::Step1Incomplete;
            }
            OptStep::Hybrid if self.generation >= self.config.step2_generations => {
                self.status = OptStatus::Finished;
            }
            _ => {}
        }
        Ok(record)
    }

    /// Run until the schedule finishes or `max_generations` more generations
    /// have been evaluated.
    pub fn run<E: Evaluator>(
        &mut self,
        evaluator: &E,
        max_generations: Option<usize>,
        mut on_generation: impl FnMut(&OptState, &GenerationRecord),
    ) -> Result<OptStatus> {
        let mut done = 0;
        while self.status == OptStatus::Running && max_generations.is_none_or(|m| done < m) {
            let rec = self.run_generation(evaluator)?;
            on_generation(self, &rec);
            done += 1;
        }
        Ok(self.status)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| SimError::Parse {
            what: "checkpoint".into(),
            reason: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|e| SimError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let state: OptState = serde_json::from_str(&text).map_err(|e| SimError::Parse {
            what: format!("checkpoint {}", path.display()),
            reason: e.to_string(),
        })?;
        if state.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(SimError::Schema {
                what: "checkpoint schema_version".into(),
                found: state.schema_version.to_string(),
                expected: CHECKPOINT_SCHEMA_VERSION.to_string(),
            });
        }
        Ok(state)
    }
}
