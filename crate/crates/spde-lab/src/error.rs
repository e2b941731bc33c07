//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two grid-bound values do not live on the same lattice.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An admissibility hypothesis (ν_{η,d} < ∞, Dalang condition,
    /// ellipticity, self-adjointness) fails for the requested run.
    #[error("admissibility violated: {0}")]
    Admissibility(String),

    /// Two independent computation routes of the same quantity disagree
    /// beyond tolerance.
    #[error("route disagreement: physical={physical}, spectral={spectral}, rel={rel:.3e}")]
    RouteDisagreement {
        physical: f64,
        spectral: f64,
        rel: f64,
    },

    /// Explicit-scheme stability certificate violated.
    #[error("stability violation: dt={dt} exceeds certified maximum {dt_max}")]
    Stability { dt: f64, dt_max: f64 },

    /// An iteration failed to converge; the increment history is attached.
    #[error("no convergence after {iterations} iterations (last increment {last:.3e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    /// Degenerate input (all-zero spectrum, empty averaging set, zero
    /// denominator, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A linear solve inside a scheme failed.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// A quadrature did not reach its requested accuracy.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// Malformed or inconsistent experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
