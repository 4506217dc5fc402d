use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gaitsim::optimizer::{OptState, OptStatus, RolloutEvaluator};
use gaitsim::plant::PassiveExo;
use gaitsim::reflex::ReflexParams;
use gaitsim_harness::metrics::{gait_metrics, GaitMetrics};
use gaitsim_harness::scenario::{load_log, metrics_context, save_log};
use gaitsim_harness::{emit_plots, load_params, params_to_toml_string, run_scenario, Config, Scenario};

#[derive(Parser)]
#[command(name = "gaitsim", version, about = "Reflex-controlled walking simulation with a hip exoskeleton")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its log and metrics.
    Run(RunArgs),
    /// Search reflex parameters with the two-step CMA-ES schedule.
    Optimize(OptimizeArgs),
    /// Recompute metrics and figures from a saved log.
    Analyze(AnalyzeArgs),
    /// Check a config file, or print the reference config.
    ValidateConfig(ValidateArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// `flat` or `uphill`.
    #[arg(long, default_value = "flat")]
    scenario: String,
    /// Desired walking speed, m/s.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Simulated time, s.
    #[arg(long)]
    horizon: Option<f64>,
    /// Config overrides (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<(Scenario, Config)> {
        let mut sc = Scenario::named(&self.scenario, self.speed)?;
        if let Some(h) = self.horizon {
            sc.horizon_s = h;
        }
        sc.validate()?;
        let cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::reference(),
        };
        Ok((sc, cfg))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Reflex parameters (flat TOML); the bundled seed when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output directory for run.csv and metrics.json.
    #[arg(long)]
    out: PathBuf,
    /// Also write SVG figures into the output directory.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop after this many generations in this invocation.
    #[arg(long)]
    max_gens: Option<usize>,
    /// Continue from a checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Initial mean (flat TOML); the bundled seed when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output directory for checkpoint.json and best_params.toml.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Log written by `run`.
    #[arg(long)]
    log: PathBuf,
    /// Write metrics JSON here instead of standard output.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Write SVG figures into this directory.
    #[arg(long, num_args = 0..=1, default_missing_value = ".")]
    plots: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Config file to check.
    path: Option<PathBuf>,
    /// Print the full reference config.
    #[arg(long)]
    print_defaults: bool,
}

fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn print_metrics(m: &GaitMetrics) {
    println!("cycles            {}", m.cycle_count);
    if let Some(s) = m.stride_length_m {
        println!("stride length     {:.3} ± {:.3} m", s.mean, s.std);
    }
    if let Some(f) = m.step_frequency_per_min {
        println!("step frequency    {f:.2} steps/min");
    }
    if let Some(v) = m.mean_speed_mps {
        println!("mean speed        {v:.3} m/s");
    }
    println!("fell              {}", m.fell);
}

fn run(a: RunArgs) -> Result<()> {
    let (sc, cfg) = a.scenario.resolve()?;
    let params = match &a.params {
        Some(p) => load_params(p)?,
        None => ReflexParams::default(),
    };
    let r = run_scenario(&params, &sc, &cfg, &PassiveExo)?;
    create_dir(&a.out)?;
    save_log(&a.out.join("run.csv"), &r.rows, sc.slope)?;
    write_json(&a.out.join("metrics.json"), &r.summary)?;
    if a.plots {
        emit_plots(&r.summary.metrics, &a.out)?;
    }
    println!("scenario          {}", sc.label);
    println!("status            {:?}", r.summary.status);
    println!("rows              {}", r.summary.log_rows);
    println!("final COM x       {:.3} m", r.summary.final_com_x_m);
    print_metrics(&r.summary.metrics);
    Ok(())
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    let (sc, cfg) = a.scenario.resolve()?;
    let model = cfg.plant_model(sc.slope)?;
    let mut state = match &a.resume {
        Some(p) => OptState::load(p)?,
        None => {
            let initial = match &a.params {
                Some(p) => load_params(p)?,
                None => ReflexParams::default(),
            };
            let oc = gaitsim::optimizer::OptimizerConfig { seed: a.seed, ..cfg.optimizer };
            OptState::new(oc, &initial)?
        }
    };
    let evaluator = RolloutEvaluator {
        model: &model,
        exo: &PassiveExo,
        pose: cfg.initial,
        speed: sc.speed_mps,
        horizon_s: sc.horizon_s,
        fitness: cfg.fitness,
    };
    create_dir(&a.out)?;
    let ckpt = a.out.join("checkpoint.json");
    let best = a.out.join("best_params.toml");
    let mut io_error = None;
    let status = state.run(&evaluator, a.max_gens, |s, r| {
        println!(
            "gen {:4} {:?} best {:.4} median {:.4} sigma {:.5} best-so-far {:.4}",
            r.generation, r.step, r.best, r.median, r.sigma, r.best_so_far
        );
        let tmp = a.out.join("checkpoint.json.tmp");
        let saved = s.save(&tmp).map_err(anyhow::Error::from).and_then(|_| {
            std::fs::rename(&tmp, &ckpt).context("replacing checkpoint")?;
            let p = s.best_params().or(s.step1_result.as_ref().map(|c| c.params));
            if let Some(p) = p {
                std::fs::write(&best, params_to_toml_string(&p)).context("writing best params")?;
            }
            Ok(())
        });
        if let Err(e) = saved {
            io_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    println!("status            {status:?}");
    if status == OptStatus::Step1Incomplete {
        println!("no candidate reached {} m; best-so-far parameters saved", cfg.fitness.psi_m);
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => Config::load(p)?,
        None => Config::reference(),
    };
    let log = load_log(&a.log)?;
    let m = gait_metrics(&log.rows, &metrics_context(&cfg, log.slope)?);
    match &a.metrics {
        Some(p) => write_json(p, &m)?,
        None => println!("{}", serde_json::to_string_pretty(&m)?),
    }
    if let Some(dir) = &a.plots {
        for p in emit_plots(&m, dir)? {
            eprintln!("wrote {}", p.display());
        }
    }
    if a.metrics.is_some() {
        print_metrics(&m);
    }
    Ok(())
}

fn validate_config(a: ValidateArgs) -> Result<()> {
    if a.print_defaults {
        print!("{}", Config::reference().to_toml_string());
        return Ok(());
    }
    let Some(path) = a.path else {
        bail!("no config file given (pass a path or --print-defaults)");
    };
    Config::load(&path)?;
    println!("{}: ok", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Optimize(a) => optimize(a),
        Command::Analyze(a) => analyze(a),
        Command::ValidateConfig(a) => validate_config(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
