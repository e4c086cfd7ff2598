use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the solvers, diagnostics and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("blow-up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("L2 norm increased by {relative:e} (relative) at t = {time}")]
    EnergyIncrease { time: f64, relative: f64 },

    #[error("missing diagnostics channel `{0}`")]
    MissingChannel(String),

    #[error("need at least {needed} equally spaced snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("oscillating part of the random field is numerically zero; pick another seed")]
    DegenerateData,

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
