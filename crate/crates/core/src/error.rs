use thiserror::Error;

/// Errors produced by the estimator, its samplers and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KdeError {
    #[error("empty coordinate vector")]
    EmptyVector,
    #[error("coordinate {index} is negative ({value})")]
    NegativeCoordinate { index: usize, value: f64 },
    #[error("coordinates sum to {sum}, which exceeds 1")]
    SumExceedsOne { sum: f64 },
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("simplex dimension must be at least 1, got {0}")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape parameter {name} must be positive and finite, got {value}")]
    NonPositiveShape { name: String, value: f64 },
    #[error("point is on the boundary of the simplex; an interior point is required")]
    BoundaryPoint,
    #[error("exponent q must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("no observations")]
    EmptyData,
    #[error("bandwidth must be positive and finite, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("at least two observations are required")]
    SingleObservation,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("pair indices must differ, got ({0}, {0})")]
    EqualIndices(usize),
    #[error("row {row} sums to {sum}, not 1")]
    RowNotNormalized { row: usize, sum: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("confidence level alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("autocorrelation lag {max_lag} too large for series of length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("latent autocorrelation must satisfy 0 <= rho < 1, got {0}")]
    InvalidRho(f64),
    #[error("at least {min} Monte Carlo points are required, got {got}")]
    InsufficientSamples { min: usize, got: usize },
    #[error("probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),
}

pub type Result<T> = std::result::Result<T, KdeError>;
