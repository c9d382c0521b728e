use thiserror::Error;

/// Errors produced by construction, queries, verification and persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("unknown cell {0}")]
    UnknownCell(String),

    #[error("point {0:?} lies outside the open unit ball")]
    OutsideDomain([f64; 3]),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("unsupported scene version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("scene invariant violated: {0}")]
    InvariantViolation(String),

    #[error("unknown format {0:?}")]
    UnknownFormat(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
