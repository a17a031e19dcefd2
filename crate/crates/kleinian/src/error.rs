use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("underdetermined system at level {level}: nullity {nullity}")]
    Underdetermined { level: usize, nullity: usize },
    #[error("inconsistent linear system at level {level}")]
    Inconsistent { level: usize },
    #[error("expansion too shallow: depth {have}, need at least {need}")]
    DepthInsufficient { have: usize, need: usize },
    #[error("runtime budget exhausted after {0} s")]
    Budget(u64),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("bad expansion file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
