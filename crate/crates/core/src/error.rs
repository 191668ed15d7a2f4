use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(#[from] crate::model::Violation),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("fractional matching does not fit the instance: {0}")]
    MatchingShape(String),

    #[error("algorithm {algo} is not applicable: {reason}")]
    AlgoMismatch { algo: String, reason: String },

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
