//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by dataset loading, graph construction, propagation,
/// clustering, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// Failed to open or read a file.
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A file was syntactically or semantically malformed.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two constraints on the same pair disagree.
    #[error("conflicting constraints for pair ({i}, {j}): {a} vs {b}")]
    ConstraintConflict { i: usize, j: usize, a: f64, b: f64 },

    /// Matrix shapes do not conform.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An iterative solve hit its iteration cap before reaching tolerance.
    #[error("no convergence after {max_iter} iterations (last relative change {residual:.3e})")]
    NoConvergence { max_iter: usize, residual: f64 },

    /// The symmetric eigensolver failed to reduce the matrix.
    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),
}

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad
    /// inputs or configuration. The CLI maps this to its exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::EigenFailure(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
