//! Error type shared by the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CslError {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),

    #[error("truncation cap exceeded: PMF length for gamma*a = {gamma_a} would exceed {cap}")]
    TruncationCapExceeded { gamma_a: f64, cap: usize },

    #[error("remainder not certifiable for |z| = {z_abs}: {reason}")]
    RemainderNotCertifiable { z_abs: f64, reason: String },

    #[error("epsilon too large: radius equation has solution R = {r} <= 1")]
    EpsilonTooLarge { r: f64 },

    #[error("epsilon not asymptotic: need epsilon < exp(-e) so that log log(1/epsilon) > 1")]
    EpsilonNotAsymptotic,

    #[error("delta too large: need 0 < delta < 1/e")]
    DeltaTooLarge,

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("likelihood degenerate: sample y = {sample} has zero mixture probability on the grid")]
    LikelihoodDegenerate { sample: u64 },

    #[error("insufficient grid: rate-slope fit needs at least 3 distinct n values")]
    InsufficientGrid,
}

pub type Result<T> = std::result::Result<T, CslError>;
