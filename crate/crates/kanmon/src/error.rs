//! Crate-wide error type.
//!
//! One enum covers the whole pipeline so callers can match on the failure
//! class (bad configuration vs. bad data vs. numerics going sideways) without
//! chasing per-module error types.

use thiserror::Error;

/// Anything that can go wrong while building, training, or evaluating models.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: impossible architecture, bad hyperparameter,
    /// malformed flag value, and the like.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid input data: malformed file, schema mismatch, ragged runs.
    #[error("data error: {0}")]
    Data(String),

    /// A caller broke an API contract (dimension mismatch, empty input, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Numerics left the representable regime (non-finite loss, overflow).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A statistic is undefined for the given sample (zero variance, n < 2).
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    /// Training diverged or could not proceed.
    #[error("training error at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    /// A serialized model/profile file is not in the expected format.
    #[error("format error: {0}")]
    Format(String),

    /// Plain I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Shorthand for a [`Error::Config`] with a formatted message.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Shorthand for a [`Error::Data`] with a formatted message.
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Shorthand for a [`Error::Contract`] with a formatted message.
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
