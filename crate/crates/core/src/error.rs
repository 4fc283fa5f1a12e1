use thiserror::Error;

/// Crate-wide error type. Variants map to distinct failure classes so the
/// CLI can assign each class its own exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON or a value that does not fit the schema (unknown enum
    /// string, wrong type, missing field).
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),

    /// Structurally valid input that violates a scene invariant.
    #[error("validation: {0}")]
    Validation(String),

    /// An operation was called with arguments that violate its preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A pluggable component or internal stage broke its contract
    /// (e.g. an interaction scorer returned a value outside [0, 1]).
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
