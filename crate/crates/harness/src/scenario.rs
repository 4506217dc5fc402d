//! Walking scenarios, single rollouts and the CSV log format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use gaitsim::optimizer::{fitness_j1, fitness_j2, J2Components};
use gaitsim::plant::{rollout, ExoTorque, LogRow, Termination, LOG_SCHEMA_VERSION};
use gaitsim::reflex::ReflexParams;
use gaitsim::SimError;

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::metrics::{gait_metrics, GaitMetrics, MetricsContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    /// Ground slope as rise over run.
    pub slope: f64,
    pub speed_mps: f64,
    pub horizon_s: f64,
    pub seed: u64,
}

pub const UPHILL_SLOPE: f64 = 0.1;
pub const DEFAULT_HORIZON_S: f64 = 10.0;

impl Scenario {
    pub fn flat(speed_mps: f64) -> Self {
        Self {
            label: format!("flat@{speed_mps}"),
            slope: 0.0,
            speed_mps,
            horizon_s: DEFAULT_HORIZON_S,
            seed: 0,
        }
    }

    pub fn uphill(speed_mps: f64) -> Self {
        Self {
            label: format!("uphill@{speed_mps}"),
            slope: UPHILL_SLOPE,
            ..Self::flat(speed_mps)
        }
    }

    /// `flat` or `uphill` at the given speed.
    pub fn named(name: &str, speed_mps: f64) -> Result<Self> {
        let s = match name {
            "flat" => Self::flat(speed_mps),
            "uphill" => Self::uphill(speed_mps),
            other => {
                return Err(SimError::config("scenario", format!("`{other}` is not one of flat, uphill")).into())
            }
        };
        s.validate()?;
        Ok(s)
    }

    /// Flat ground at 0.9, 1.0 and 1.1 m/s, then uphill at 1.0 m/s.
    pub fn canonical() -> Vec<Self> {
        vec![Self::flat(0.9), Self::flat(1.0), Self::flat(1.1), Self::uphill(1.0)]
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("scenario.horizon_s", self.horizon_s), ("scenario.speed_mps", self.speed_mps)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::config(key, format!("{v} must be finite and > 0")).into());
            }
        }
        if !(self.slope.is_finite() && self.slope.abs() <= 1.0) {
            return Err(SimError::config("scenario.slope", format!("{} outside [-1, 1]", self.slope)).into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Fell { t: f64 },
    Aborted { t: f64, reason: String },
}

impl From<&Termination> for RunStatus {
    fn from(t: &Termination) -> Self {
        match t {
            Termination::Completed => RunStatus::Completed,
            Termination::Fell { t } => RunStatus::Fell { t: *t },
            Termination::Aborted { t, reason } => RunStatus::Aborted {
                t: *t,
                reason: reason.clone(),
            },
        }
    }
}

/// Everything summarized from one rollout except the log rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub status: RunStatus,
    pub log_rows: usize,
    pub final_com_x_m: f64,
    pub j1: f64,
    pub j2: J2Components,
    pub metrics: GaitMetrics,
}

#[derive(Clone, Debug)]
pub struct RolloutResult {
    pub rows: Vec<LogRow>,
    pub summary: RunSummary,
}

pub fn metrics_context(cfg: &Config, slope: f64) -> Result<MetricsContext> {
    let model = cfg.plant_model(slope)?;
    Ok(MetricsContext {
        slope,
        fall_height_m: model.fall_height(),
    })
}

pub fn run_scenario(
    params: &ReflexParams,
    scenario: &Scenario,
    cfg: &Config,
    exo: &dyn ExoTorque,
) -> Result<RolloutResult> {
    scenario.validate()?;
    params.validate()?;
    let model = cfg.plant_model(scenario.slope)?;
    let r = rollout(&model, *params, exo, &cfg.initial, scenario.speed_mps, scenario.horizon_s);
    let fell = r.termination.fell();
    let mut metrics = gait_metrics(
        &r.rows,
        &MetricsContext {
            slope: scenario.slope,
            fall_height_m: model.fall_height(),
        },
    );
    metrics.fell |= fell;
    let j1 = fitness_j1(r.final_com_x, cfg.fitness.psi_m, scenario.slope);
    let j2 = fitness_j2(
        &r.rows,
        fell,
        r.final_com_x,
        scenario.slope,
        scenario.speed_mps,
        model.timing.controller_dt_s,
        &cfg.fitness,
    );
    let summary = RunSummary {
        schema_version: crate::metrics::METRICS_SCHEMA_VERSION,
        scenario: scenario.clone(),
        status: RunStatus::from(&r.termination),
        log_rows: r.rows.len(),
        final_com_x_m: r.final_com_x,
        j1,
        j2,
        metrics,
    };
    Ok(RolloutResult { rows: r.rows, summary })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Header line naming the log layout version and the scenario slope.
fn preamble(slope: f64) -> String {
    format!("# gaitsim log schema_version={LOG_SCHEMA_VERSION} slope={slope}\n")
}

pub fn write_log<W: std::io::Write>(mut w: W, rows: &[LogRow], slope: f64) -> std::io::Result<()> {
    w.write_all(preamble(slope).as_bytes())?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(LogRow::column_names())?;
    for r in rows {
        out.write_record(r.to_record())?;
    }
    out.flush()
}

pub fn save_log(path: &Path, rows: &[LogRow], slope: f64) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
    write_log(std::io::BufWriter::new(file), rows, slope).map_err(|e| SimError::io(path, e).into())
}

/// A parsed log: rows plus the slope recorded in its preamble.
#[derive(Clone, Debug)]
pub struct LogFile {
    pub rows: Vec<LogRow>,
    pub slope: f64,
}

pub fn read_log(text: &str, path: &Path) -> Result<LogFile> {
    let first = text.lines().next().unwrap_or_default();
    let field = |name: &str| {
        first
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix(name).and_then(|v| v.strip_prefix('=')))
    };
    let version = field("schema_version");
    if !first.starts_with('#') || version != Some(&LOG_SCHEMA_VERSION.to_string()) {
        return Err(SimError::Schema {
            what: format!("log {}", path.display()),
            found: version.unwrap_or("none").to_string(),
            expected: format!("schema_version={LOG_SCHEMA_VERSION}"),
        }
        .into());
    }
    let slope = field("slope").and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    if header != LogRow::column_names() {
        return Err(SimError::Schema {
            what: format!("log header of {}", path.display()),
            found: format!("{} columns", header.len()),
            expected: format!("{} known columns", LogRow::column_names().len()),
        }
        .into());
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err(path))?;
        rows.push(LogRow::from_record(&rec.iter().collect::<Vec<_>>())?);
    }
    Ok(LogFile { rows, slope })
}

pub fn load_log(path: &Path) -> Result<LogFile> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    read_log(&text, path)
}
