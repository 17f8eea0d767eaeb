use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates its documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A query falls outside the region where the object is defined.
    #[error("out of domain: {0}")]
    Domain(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
