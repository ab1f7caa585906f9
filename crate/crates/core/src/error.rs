use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{requested} sources requested but the co-array supports at most {capacity}")]
    OverCapacity { requested: usize, capacity: usize },

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("malformed snapshot dump: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
