use thiserror::Error;

/// Errors produced by the numeric routines and the data loaders.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument is valid but exceeds what the available data or the
    /// implementation limits can serve.
    #[error("range error: {0}")]
    Range(String),

    /// Malformed coefficient file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Coefficient data violating an eigenform invariant.
    #[error("invariant `{invariant}` violated at n = {n}: {msg}")]
    Invariant {
        invariant: &'static str,
        n: u64,
        msg: String,
    },

    /// Data that is internally inconsistent, such as a root number far from ±1.
    #[error("data error: {0}")]
    Data(String),

    /// A special-function evaluation could not reach its accuracy target.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
