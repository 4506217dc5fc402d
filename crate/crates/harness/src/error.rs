use thiserror::Error;

use gaitsim::SimError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("metrics unavailable: {0}")]
    MetricsUnavailable(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
