use thiserror::Error;

/// Everything that can go wrong inside a rollout, a config load or an
/// optimization run.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("degenerate muscle path for {muscle}: attachment points coincide")]
    DegenerateGeometry { muscle: String },

    #[error("fiber velocity solve failed for {muscle} (residual {residual:.3e} N after {iterations} iterations)")]
    FiberSolve {
        muscle: String,
        residual: f64,
        iterations: usize,
    },

    #[error("mass matrix is not positive definite at t = {t:.4} s")]
    SingularMassMatrix { t: f64 },

    #[error("non-finite state at t = {t:.4} s ({what})")]
    NonFinite { t: f64, what: String },

    #[error("invalid curve definition: {0}")]
    Curve(String),

    #[error("config key `{key}`: {reason}")]
    ConfigValue { key: String, reason: String },

    #[error("unknown config key `{key}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey {
        key: String,
        suggestion: Option<String>,
    },

    #[error("{what}: found {found}, expected {expected}")]
    Schema {
        what: String,
        found: String,
        expected: String,
    },

    #[error("parse error in {what}: {reason}")]
    Parse { what: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

impl SimError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::ConfigValue {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
