use thiserror::Error;

/// Errors raised by the peakon library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeakonError {
    #[error("a peakon state needs at least one peakon")]
    Empty,
    #[error("positions and momenta differ in length ({positions} vs {momenta})")]
    LengthMismatch { positions: usize, momenta: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("positions must be strictly increasing: x[{index}] = {left} is not below x[{}] = {right}", index + 1)]
    Unordered { index: usize, left: f64, right: f64 },
    #[error("operation needs at least {needed} peakons, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("mollifier width must be positive and finite, got {0}")]
    InvalidWidth(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("partition does not match the state: {0}")]
    InvalidPartition(String),
    #[error("step size too large: {0}")]
    StepSize(String),
    #[error("regularized run lost ordering at t = {t}")]
    OrderingLost { t: f64 },
    #[error("quadrature did not converge: estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, PeakonError>;
