use thiserror::Error;

/// Errors raised by constructors and operations across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OtError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("normalization error: weights sum to {sum}, expected 1")]
    Normalization { sum: String },

    #[error("index {index} out of range for size {size}")]
    Index { index: usize, size: usize },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("restriction selects zero mass")]
    EmptyRestriction,

    #[error("middle marginals disagree; worst index {index}: {left} vs {right}")]
    Glue { index: usize, left: String, right: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("transportation simplex exceeded {0} pivots")]
    IterationLimit(usize),

    #[error("invalid field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl OtError {
    pub fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        OtError::Parse { field: field.into(), message: message.into() }
    }
}

pub type Result<T, E = OtError> = std::result::Result<T, E>;
