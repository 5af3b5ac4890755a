use std::io;

use thiserror::Error;

/// Errors produced by the completion toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("SVD failed to converge after {iterations} QR steps (off-diagonal residual {residual:e})")]
    SvdNoConvergence { iterations: usize, residual: f64 },

    #[error("power iteration failed to converge after {iterations} iterations (last change {change:e})")]
    PowerIterationNoConvergence { iterations: usize, change: f64 },

    #[error("empty dictionary")]
    EmptyDictionary,

    #[error("matrix is zero: {0}")]
    ZeroMatrix(&'static str),

    #[error("degenerate estimate: completion produced an all-zero matrix")]
    DegenerateEstimate,

    #[error("Neumann series diverges: operator norm {psi} is not below 1")]
    NeumannDiverges { psi: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
