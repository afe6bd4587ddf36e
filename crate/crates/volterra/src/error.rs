//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by kernel evaluation, quadrature, simulation and solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Arguments outside the operation's domain (e.g. `s >= t`).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid parameter combination at construction time.
    #[error("configuration error: {0}")]
    Config(String),

    /// Adaptive quadrature did not reach the requested accuracy in budget.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// Work estimate exceeds the configured cap.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Two lattice-indexed objects do not share a grid.
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    /// A regression underlying an estimator had an unacceptable fit.
    #[error("fit quality too low: {0}")]
    FitQuality(String),

    /// The Picard map failed to contract on the smallest admissible window.
    #[error("no contraction: {0}")]
    NoContraction(String),

    /// Iteration limit reached before the tolerance was met.
    #[error("iteration limit reached: {0}")]
    MaxIter(String),

    /// A search (e.g. bisection) found no admissible value.
    #[error("not found: {0}")]
    NotFound(String),

    /// The requested configuration is intentionally unimplemented.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A time was requested that is not a grid point.
    #[error("not a grid point: {0}")]
    NotOnGrid(String),

    /// A measured regularity constant exceeded its configured bound.
    #[error("regularity bound exceeded: {0}")]
    Regularity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
