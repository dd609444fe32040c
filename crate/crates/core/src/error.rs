use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid num_points must be a power of two >= 64, got {0}")]
    InvalidGridSize(usize),
    #[error("grid half-width must be positive and finite, got {0}")]
    InvalidHalfWidth(f64),
    #[error("grid half-width {half_width} leaves mass > {tolerance:e} outside; need at least {required}")]
    GridTooNarrow {
        half_width: f64,
        required: f64,
        tolerance: f64,
    },
    #[error("grids differ")]
    GridMismatch,
    #[error("distribution mean {0} is not zero")]
    NonZeroMean(f64),
    #[error("invalid distribution parameters: {0}")]
    InvalidDistribution(String),
    #[error("characteristic function is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("characteristic function does not satisfy F(0) = 1 (F(0) = {0})")]
    NotNormalized(f64),
    #[error("inverse transform has imaginary residue {0:e}")]
    ExcessImaginary(f64),
    #[error("characteristic function crosses zero at omega = {omega}")]
    ZeroCrossing { omega: f64 },
    #[error("moment order {0} exceeds the supported maximum of 24")]
    MomentOrderTooHigh(usize),
    #[error("moment of order {order} loses {relative:e} relative mass to grid truncation")]
    MomentOverflow { order: usize, relative: f64 },
    #[error("{0} has no density")]
    NoDensity(&'static str),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("basis order {0} exceeds the supported maximum")]
    OrderTooHigh(usize),
    #[error("moment Hankel matrix is ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),
    #[error("basis measure does not match the output density (relative moment deviation {0:e})")]
    BasisMismatch(f64),
    #[error("no parameter vector in the family yields a nonnegative density at the budget")]
    InfeasibleFamily,
    #[error("ODE integration became unstable at omega = {omega} (|G| = {magnitude})")]
    UnstableIntegration { omega: f64, magnitude: f64 },
    #[error("power constraint violated: E[g^2] = {actual} exceeds budget {budget}")]
    PowerViolation { actual: f64, budget: f64 },
    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
