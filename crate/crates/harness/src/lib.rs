//! Configuration loading, scenario orchestration, gait metrics and figure
//! output around the `gaitsim` simulation core.

pub mod config;
pub mod error;
pub mod metrics;
pub mod plot;
pub mod scenario;

pub use config::{load_params, params_from_toml_str, params_to_toml_string, Config};
pub use error::{HarnessError, Result};
pub use metrics::{curve_correlation, gait_metrics, GaitMetrics, MetricsContext};
pub use plot::emit_plots;
pub use scenario::{run_scenario, RolloutResult, RunSummary, Scenario};
