use thiserror::Error;

/// Errors produced by the estimation pipeline.
///
/// Row and column numbers carried by ingestion errors are 1-based, as a user
/// would count them in the source file. Column indices carried by numerical
/// errors are 0-based predictor indices.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error at row {row}, column {column}: {token:?} is not a number")]
    Parse {
        row: usize,
        column: usize,
        token: String,
    },

    #[error("row {row} has {found} fields, expected {expected}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("missing value in response column at row {row}")]
    MissingResponse { row: usize },

    #[error("response column {0:?} not found")]
    UnknownResponse(String),

    #[error("dataset too small: {0}")]
    TooSmall(String),

    #[error("fully missing column {}{}", .index + 1, .name.as_ref().map(|n| format!(" ({n})")).unwrap_or_default())]
    FullyMissingColumn { index: usize, name: Option<String> },

    #[error("operation requires a centered dataset")]
    NotCentered,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("eigendecomposition failed to converge")]
    Eigen,

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("non-positive diagonal entry {value:e} at coordinate {index}")]
    ZeroDiagonal { index: usize, value: f64 },

    #[error("fold assignment failed: {0}")]
    FoldAssignment(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
