use std::path::Path;
use std::process::{Command, Output};

fn gaitsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitsim")).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn printed_defaults_validate() {
    let out = gaitsim(&["validate-config", "--print-defaults"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("defaults.toml");
    std::fs::write(&path, &out.stdout).unwrap();
    let check = gaitsim(&["validate-config", path.to_str().unwrap()]);
    assert!(check.status.success(), "{}", text(&check.stderr));
}

#[test]
fn out_of_range_config_fails_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[muscles.sol]\nf_opt = -5\n").unwrap();
    let out = gaitsim(&["validate-config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("muscles.sol.f_opt"), "{}", text(&out.stderr));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(gaitsim(&["run", "--no-such-flag"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = gaitsim(&["run", "--scenario", "stairs", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn run_then_analyze_reproduces_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let params = concat!(env!("CARGO_MANIFEST_DIR"), "/../harness/data/walker_params.toml");
    let o = out_dir.to_str().unwrap();
    let run = gaitsim(&["run", "--horizon", "3", "--params", params, "--out", o, "--plots"]);
    assert!(run.status.success(), "{}", text(&run.stderr));
    for f in ["run.csv", "metrics.json", "activations.svg", "joint_angles.svg", "grf.svg", "torques.svg"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let log = out_dir.join("run.csv");
    let metrics = dir.path().join("again.json");
    let plots = dir.path().join("plots");
    let an = gaitsim(&[
        "analyze",
        "--log",
        log.to_str().unwrap(),
        "--metrics",
        metrics.to_str().unwrap(),
        "--plots",
        plots.to_str().unwrap(),
    ]);
    assert!(an.status.success(), "{}", text(&an.stderr));
    assert_eq!(read(&plots.join("activations.svg")), read(&out_dir.join("activations.svg")));
    let summary: serde_json::Value = serde_json::from_slice(&read(&out_dir.join("metrics.json"))).unwrap();
    let again: serde_json::Value = serde_json::from_slice(&read(&metrics)).unwrap();
    assert_eq!(summary["metrics"], again);
}

#[test]
fn optimize_writes_a_resumable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let first = gaitsim(&["optimize", "--horizon", "0.3", "--max-gens", "1", "--seed", "4", "--out", o]);
    assert!(first.status.success(), "{}", text(&first.stderr));
    assert!(text(&first.stdout).contains("gen    0"));
    let ckpt = dir.path().join("checkpoint.json");
    assert!(ckpt.exists() && dir.path().join("best_params.toml").exists());
    let second = gaitsim(&[
        "optimize",
        "--horizon",
        "0.3",
        "--max-gens",
        "1",
        "--resume",
        ckpt.to_str().unwrap(),
        "--out",
        o,
    ]);
    assert!(second.status.success(), "{}", text(&second.stderr));
    assert!(text(&second.stdout).contains("gen    1"));
}
