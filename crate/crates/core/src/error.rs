use thiserror::Error;

/// Errors raised by the statistics, simulation and pipeline layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DmError {
    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("lag {lag} out of range for series of length {len}")]
    LagOutOfRange { lag: usize, len: usize },

    #[error("bandwidth {bandwidth} out of range [1, {max}]")]
    BandwidthOutOfRange { bandwidth: usize, max: usize },

    #[error("degenerate design matrix: {0}")]
    DegenerateDesign(String),

    #[error("degenerate variance: long-run variance estimate is zero")]
    DegenerateVariance,

    #[error("zero-variance input series")]
    ZeroVariance,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported significance level {0}")]
    UnsupportedLevel(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("gap in monthly series: missing {0}")]
    Gap(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, DmError>;

impl From<std::io::Error> for DmError {
    fn from(e: std::io::Error) -> Self {
        DmError::Io(e.to_string())
    }
}

impl From<csv::Error> for DmError {
    fn from(e: csv::Error) -> Self {
        DmError::Io(e.to_string())
    }
}
