use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field variable mismatch: expected {expected}, got {found}")]
    VariableMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("unsupported geometry for {0}")]
    UnsupportedGeometry(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("eigen iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("time {t} outside validity window (must be < {limit})")]
    OutsideWindow { t: f64, limit: f64 },

    #[error("negative density {value:e} at index {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}
