//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside the design's domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A dataset or internal structure violates a required invariant.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// An exposure-probability table is inconsistent with realized data,
    /// e.g. a realized condition with estimated probability zero, or a
    /// variance request against a table built without joint probabilities.
    #[error("probability error: {0}")]
    Probability(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
