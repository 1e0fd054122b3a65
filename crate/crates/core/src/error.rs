use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric: |M[{row}][{col}] - M[{col}][{row}]| = {defect:e}")]
    NotSymmetric { row: usize, col: usize, defect: f64 },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver failed to converge for eigenpair {index}")]
    NoConvergence { index: usize },

    #[error("state is not normalized: norm = {norm}")]
    Unnormalized { norm: f64 },

    #[error("position grid too small: boundary amplitude {amplitude:e} exceeds {limit:e}")]
    GridTooSmall { amplitude: f64, limit: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("convergence sentinel failed at {failed} of {total} grid points")]
    Sentinel { failed: usize, total: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::InvalidGrid(_)
            | Error::Config(_)
            | Error::GridTooSmall { .. } => 2,
            Error::DimensionMismatch(_)
            | Error::NotSymmetric { .. }
            | Error::NonFinite { .. }
            | Error::NoConvergence { .. }
            | Error::Unnormalized { .. } => 3,
            Error::Sentinel { .. } => 4,
            Error::Io { .. } => 1,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
