use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph parameters: {0}")]
    InvalidParameters(String),

    #[error("random regular generation gave up after {attempts} attempts (n={n}, d={d})")]
    RetryBudgetExhausted { n: usize, d: usize, attempts: u64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph is bipartite; the absolute second eigenvalue equals 1")]
    Bipartite,

    #[error("eigensolver did not converge within {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("initial sizes sum to {got}, graph has {expected} vertices")]
    SizeMismatch { expected: usize, got: usize },

    #[error("inequality violated: {0}")]
    Violation(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
