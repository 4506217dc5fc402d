use gaitsim::optimizer::{Evaluator, OptState, OptStatus, OptStep, OptimizerConfig};
use gaitsim::reflex::ReflexParams;

/// Squared distance to 0.2 in the normalized box; the first step succeeds
/// once it drops below 0.05.
struct Quadratic;

impl Evaluator for Quadratic {
    fn evaluate(&self, p: &ReflexParams, step: OptStep) -> f64 {
        let d: f64 = p.to_normalized().iter().map(|u| (u - 0.2).powi(2)).sum();
        match step {
            OptStep::Distance => d - 0.05,
            OptStep::Hybrid => d,
        }
    }
}

fn config(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        seed,
        sigma0: 0.05,
        step1_generations: 400,
        step2_generations: 5,
        ..Default::default()
    }
}

#[test]
fn two_step_schedule_runs_to_completion() {
    let mut s = OptState::new(config(3), &ReflexParams::default()).unwrap();
    let status = s.run(&Quadratic, None, |_, _| {}).unwrap();
    assert_eq!(status, OptStatus::Finished);
    let trigger = s.step1_result.as_ref().unwrap();
    assert!(trigger.fitness < 0.0);
    assert_eq!(s.step, OptStep::Hybrid);
    assert_eq!(s.generation, 5);
}

#[test]
fn checkpoint_file_resumes_the_same_search() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    let mut whole = OptState::new(config(11), &ReflexParams::default()).unwrap();
    whole.run(&Quadratic, Some(8), |_, _| {}).unwrap();

    let mut part = OptState::new(config(11), &ReflexParams::default()).unwrap();
    part.run(&Quadratic, Some(3), |_, _| {}).unwrap();
    part.save(&path).unwrap();
    let mut resumed = OptState::load(&path).unwrap();
    resumed.run(&Quadratic, Some(5), |_, _| {}).unwrap();
    assert_eq!(resumed.history, whole.history);
    assert_eq!(resumed.best, whole.best);
}
