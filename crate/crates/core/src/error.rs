use thiserror::Error;

/// Errors raised by state construction, loss-channel assembly and the
/// Fisher-information engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state has no nonzero amplitude")]
    DegenerateState,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("components collide at photon number {0} after placement")]
    Collision(usize),

    #[error("unsupported loss configuration: {0}")]
    Unsupported(String),

    #[error("upper bound is infinite for a lossless configuration; use the N^2 Heisenberg cap")]
    Unbounded,

    #[error("density block k={k} failed integrity check: smallest eigenvalue {min_eigenvalue:e} with trace {trace:e}")]
    Integrity {
        k: usize,
        min_eigenvalue: f64,
        trace: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
