use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty series: {0}")]
    EmptySeries(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("infeasible action: {0}")]
    InfeasibleAction(String),

    #[error("infeasible reserve: SoC buffer {buffer:.6} exceeds 1")]
    InfeasibleReserve { buffer: f64 },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("target tau {target:.4} unreachable; best achieved {best:.4}")]
    Unreachable { target: f64, best: f64 },

    #[error("gap in {what} at slot {slot}")]
    Gap { what: String, slot: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid timestamp {0:?}")]
    Timestamp(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Validation problems (bad config, bad arguments) as opposed to data or
    /// runtime failures. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
