use gaitsim::plant::PassiveExo;
use gaitsim_harness::config::Config;
use gaitsim_harness::metrics::gait_metrics;
use gaitsim_harness::scenario::{load_log, metrics_context, save_log, RunStatus};
use gaitsim_harness::{params_from_toml_str, run_scenario, Scenario};

const WALKER: &str = include_str!("../data/walker_params.toml");

fn short(sc: Scenario, horizon_s: f64) -> Scenario {
    Scenario { horizon_s, ..sc }
}

#[test]
fn walker_log_round_trips_to_the_same_metrics() {
    let cfg = Config::reference();
    let params = params_from_toml_str(WALKER).unwrap();
    let sc = short(Scenario::flat(1.0), 4.0);
    let r = run_scenario(&params, &sc, &cfg, &PassiveExo).unwrap();
    assert_eq!(r.summary.status, RunStatus::Completed);
    assert!(r.summary.metrics.cycle_count >= 2);
    assert!(r.summary.final_com_x_m > 3.0);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    save_log(&path, &r.rows, sc.slope).unwrap();
    let log = load_log(&path).unwrap();
    assert_eq!(log.rows, r.rows);
    let again = gait_metrics(&log.rows, &metrics_context(&cfg, log.slope).unwrap());
    assert_eq!(again, r.summary.metrics);
}

#[test]
fn seed_parameters_fall_and_are_penalized() {
    let cfg = Config::reference();
    let sc = short(Scenario::flat(1.0), 6.0);
    let r = run_scenario(&Default::default(), &sc, &cfg, &PassiveExo).unwrap();
    assert!(matches!(r.summary.status, RunStatus::Fell { .. }));
    assert!(r.summary.metrics.fell);
    assert!(r.summary.j2.vel >= 1.0);
    assert!(r.summary.j1 > 0.0);
}

#[test]
fn config_file_overrides_reach_the_plant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stiff.toml");
    std::fs::write(&path, "[contact]\nk = 200000\n[limits]\nenabled = false\n").unwrap();
    let cfg = Config::load(&path).unwrap();
    let m = cfg.plant_model(0.1).unwrap();
    assert_eq!(m.contact.k, 200000.0);
    assert!(!m.limits.enabled);
    assert_eq!(m.ground.slope, 0.1);
}
