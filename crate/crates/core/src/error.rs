//! Crate-wide error type.
//!
//! Errors are grouped by what the caller should do about them: fix the
//! input (`Validation`, `Parse`, `Shape`), fix the data on disk (`Io`),
//! or accept that a solver gave up (`NotSpd`, `SvdNoConvergence`,
//! `Divergence`). The CLI maps these groups onto distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input failed a documented precondition (bad range, bad header,
    /// inconsistent configuration, ...).
    #[error("validation: {0}")]
    Validation(String),

    /// Two operands have incompatible shapes for the requested operation.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A text file (CSV, JSON sidecar, config) could not be parsed.
    #[error("parse error in {file}: {msg}")]
    Parse { file: String, msg: String },

    /// Filesystem trouble, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A matrix handed to the Cholesky path was not symmetric positive
    /// definite (within tolerance).
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    /// The Jacobi SVD failed to reach its off-diagonal tolerance.
    #[error("svd did not converge within the sweep limit on a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },

    /// An iterative solver diverged or a per-sample subproblem failed.
    #[error("solver failure: {0}")]
    Divergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Helper for attaching a path to a raw `std::io::Error`.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn parse(file: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            msg: msg.into(),
        }
    }
}
