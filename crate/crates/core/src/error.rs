use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("zero matrix has no spectral normalization")]
    ZeroMatrix,

    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),

    #[error("rank deficient: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("stepsize lambda = {lambda} violates lambda < 1/L = {bound} (FBS descent requires lambda*L < 1)")]
    StepsizeTooLarge { lambda: f64, bound: f64 },

    #[error("schedule denominator 1 + a*exp(-r*k) vanishes at k = {0}")]
    ScheduleSingular(usize),

    #[error("initial point must be nonzero")]
    ZeroInitialPoint,
}
