use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("update at t={got} out of sequence (expected t={expected})")]
    OutOfSequence { expected: u64, got: u64 },

    #[error("capacity exceeded: t={t} > capacity {capacity}")]
    CapacityExceeded { t: u64, capacity: u64 },

    #[error("ragged update vector at step {step}: expected length {expected}, got {got}")]
    Shape {
        step: usize,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}: stream is empty")]
    EmptyStream(PathBuf),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
