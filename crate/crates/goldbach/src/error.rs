use std::io;

use thiserror::Error;

/// Errors surfaced by the library. The CLI maps these onto exit codes:
/// domain/format problems exit 2, resource and coverage problems exit 3.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A query needs primes beyond what has been sieved.
    #[error("coverage error: need primes up to {needed} but coverage ends at {coverage}")]
    Coverage { needed: u64, coverage: u64 },

    /// A request would exceed a configured resource limit.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A pi cache file is malformed.
    #[error("cache format error at line {line}: {reason}")]
    CacheFormat { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
