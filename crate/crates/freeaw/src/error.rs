//! Error type shared by all modules.

use crate::C64;

/// Library result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes surfaced to callers.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("constraint violation: {0}")]
    Constraint(String),

    /// Parameter configuration falls outside the implemented cases.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    /// The best available estimate and its last correction are attached.
    #[error("quadrature did not converge: |delta| = {last_delta:.3e} after {nodes} nodes")]
    QuadratureFailure {
        best: C64,
        last_delta: f64,
        nodes: usize,
    },

    /// Requested enumeration or nesting size exceeds the configured guard.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    /// Non-finite value (NaN or infinity) encountered where finite data is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

impl Error {
    pub fn constraint(msg: impl Into<String>) -> Self {
        Error::Constraint(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub fn size_guard(msg: impl Into<String>) -> Self {
        Error::SizeGuard(msg.into())
    }

    pub fn non_finite(msg: impl Into<String>) -> Self {
        Error::NonFinite(msg.into())
    }
}
