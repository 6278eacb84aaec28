//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// A mathematical precondition was violated (out-of-support argument,
    /// nonpositive scale, empty input and the like).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data (bad CSV row, unparseable date, bad country code).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A fit finished but failed its quality gate (divergences, R-hat,
    /// non-finite objective).
    #[error("quality check failed: {0}")]
    Quality(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn quality(msg: impl Into<String>) -> Self {
        Error::Quality(msg.into())
    }
}
