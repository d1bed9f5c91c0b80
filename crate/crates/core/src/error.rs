use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A code parameter violates one of the structural invariants.
    #[error("invalid code spec: {0}")]
    InvalidSpec(&'static str),

    #[error("expected a block of {expected} bits, got {actual}")]
    BlockLength { expected: usize, actual: usize },

    #[error("expected {expected} data blocks, got {actual}")]
    BlockCount { expected: usize, actual: usize },

    #[error("expected {expected} values, got {actual}")]
    FrameLength { expected: usize, actual: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The requested computation would exceed the configured size budget.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("search for {0} did not terminate below the cap")]
    SearchCap(&'static str),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
