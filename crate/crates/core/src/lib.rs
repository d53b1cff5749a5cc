//! # csl-core
//!
//! Numerical comparison of Poisson and Gaussian smoothing channels acting on
//! priors supported on `[0, a]`.
//!
//! The library is organized around five subsystems:
//!
//! - [`measures`]: finitely atomic priors, their Poisson-mixture PMFs (with
//!   certified truncation) and Gaussian-mixture densities/CDFs, seeded sampling.
//! - [`transforms`]: characteristic functions, Laplace transforms at complex
//!   arguments, the z-transform of a Poisson mixture, and max-modulus scans on
//!   circles in the complex plane.
//! - [`divergences`]: TV, squared Hellinger, L2, W1 and Gaussian-smoothed W1
//!   between channel outputs, each returning a value together with a certified
//!   numerical error bound.
//! - [`bounds`]: the explicit channel-comparison bound formulas (radius
//!   equation, characteristic-function envelope, exponent maximum, the two
//!   theorem-level bounds and the auxiliary lemma bounds).
//! - [`estimation`]: grid-based NPMLE for Poisson mixtures via EM and a seeded
//!   Monte-Carlo rate-study harness with log-log slope fitting.
//!
//! Core math is generic over the scalar type through the [`scalar::Scalar`]
//! trait; `f64` aliases for the main domain types live at the crate root.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod divergences;
pub mod error;
pub mod estimation;
pub mod measures;
pub mod quadrature;
pub mod scalar;
pub mod transforms;

pub use error::{CslError, Result};
pub use scalar::Scalar;

/// Default working precision for the experiment pipeline.
pub type Real = f64;

/// `f64` prior on `[0, a]`.
pub type Prior = measures::Prior<f64>;
/// `f64` channel parameter triple `(a, sigma, gamma)` plus tolerance.
pub type ChannelParams = measures::ChannelParams<f64>;
/// `f64` truncated Poisson-mixture PMF.
pub type PoissonMixtureTable = measures::PoissonMixtureTable<f64>;
/// `f64` Gaussian mixture.
pub type GaussianMixture = measures::GaussianMixture<f64>;
/// `f64` divergence outcome.
pub type DivergenceResult = divergences::DivergenceResult<f64>;
/// `f64` bound-evaluation report.
pub type BoundReport = bounds::BoundReport<f64>;
