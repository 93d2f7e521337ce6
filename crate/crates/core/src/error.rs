//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size limit exceeded for {what}: requested {requested}, cap {cap}")]
    SizeLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state space mismatch between operands")]
    SpaceMismatch,

    #[error("kernel is reducible: state {from} does not communicate with state {to}")]
    Reducible { from: usize, to: usize },

    #[error("kernel is periodic with period {period}")]
    Periodic { period: usize },

    #[error("kernel is not reversible: detailed balance off by {violation:e} at edge ({x}, {y})")]
    NotReversible { x: usize, y: usize, violation: f64 },

    #[error("empty block")]
    EmptyBlock,

    #[error("partition block {index} has zero stationary mass")]
    ZeroMassBlock { index: usize },

    #[error("path for pair ({from} -> {to}) has an invalid edge at offset {offset}")]
    InvalidPathEdge {
        from: String,
        to: String,
        offset: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Convenience constructor used throughout the crate.
pub fn domain(msg: impl Into<String>) -> Error {
    Error::domain(msg)
}

pub type Result<T> = std::result::Result<T, Error>;
