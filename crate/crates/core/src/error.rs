use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IsacError {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("power equation root-finding failed: bracket [{lo:e}, {hi:e}], residuals [{f_lo:e}, {f_hi:e}]")]
    RootFinding { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("degenerate ascent direction: {0}")]
    DegenerateDirection(String),

    #[error("empty sample")]
    EmptySample,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

pub type Result<T> = std::result::Result<T, IsacError>;

pub(crate) fn dim_mismatch(
    op: &'static str,
    expected: impl Into<String>,
    got: impl Into<String>,
) -> IsacError {
    IsacError::DimensionMismatch {
        op,
        expected: expected.into(),
        got: got.into(),
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> IsacError {
    IsacError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
