//! A numerics laboratory for strictly parabolic SPDEs on a periodic
//! approximation of `R^d` (d = 1, 2), driven by Gaussian noise that is white
//! in time and spatially homogeneous in space.
//!
//! The crate is organised around the pipeline
//!
//! ```text
//! correlation  ->  hilbert  ->  noise  ->  {mild, weak}  ->  regularity
//!      \________ green (fundamental solutions) ________/
//! ```
//!
//! * [`correlation`] — spatial covariance models, spectral measures, the
//!   Bessel kernel of `(1 - Δ)^{-η/2}`, the admissibility quantity
//!   `ν_{η,d}` and the Dalang integral.
//! * [`hilbert`] — the discrete reproducing Hilbert space of the noise on a
//!   periodic lattice: inner product, orthonormal system, `v_k` fields.
//! * [`sobolev`] — fractional Sobolev norms through Bessel-potential
//!   Fourier multipliers.
//! * [`noise`] — seedable sampling of the driving increments, white across
//!   time steps and correlated across space.
//! * [`green`] — Gaussian kernels, exact constant-coefficient fundamental
//!   solutions, and θ-scheme numerical fundamental solutions.
//! * [`mild`] — Picard fixed-point solver for the evolution (mild) form.
//! * [`weak`] — θ-scheme method-of-lines solver for the weak form, plus
//!   test-function pairing residuals.
//! * [`regularity`] — structure-function estimation of Hölder exponents.
//! * [`experiment`] — batch orchestration, reports, and reproducible
//!   manifests; also backs the `spde-lab` command-line binary.
//!
//! Start with the runnable examples (`cargo run --release --example ...`);
//! each one demonstrates a major capability end to end.

pub mod bessel;
pub mod coeffs;
pub mod correlation;
pub mod error;
pub mod experiment;
pub mod fft;
pub mod green;
pub mod grid;
pub mod hilbert;
pub mod mild;
pub mod noise;
pub mod problem;
pub mod quadrature;
pub mod regularity;
pub mod sobolev;
pub mod weak;

pub use error::Error;

/// Library version recorded in every report for provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
