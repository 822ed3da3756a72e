use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("site {site} out of range for {len} sites")]
    SiteOutOfRange { site: usize, len: usize },
    #[error("configuration has {got} sites, kernel has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time {t} exceeds horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("state space too large for exact enumeration: {0} sites (max {1})")]
    TooManySites(usize, usize),
    #[error("numerical self-check failed: {0}")]
    SelfCheck(String),
    #[error("need at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
