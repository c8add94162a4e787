//! Crate-wide error type and result alias.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible matrix shapes for an operation; both shapes are named.
    #[error(
        "{op}: shape mismatch, left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}"
    )]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// A constructor or command was given an argument that violates its contract.
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    /// A matrix constructor was handed NaN or infinity.
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    /// The Jacobi sweep loop hit its iteration cap without orthogonalizing.
    #[error("SVD did not converge after {sweeps} sweeps")]
    SvdNonConvergence { sweeps: usize },

    /// A data file could not be parsed; locates the offending cell.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A model file was structurally malformed; `path` is the JSON field path.
    #[error("model file error at `{path}`: {message}")]
    ModelFormat { path: String, message: String },

    /// A model file was written by an unsupported format version.
    #[error("unsupported model format version {found}, this build reads version {supported}")]
    VersionMismatch { found: u32, supported: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
