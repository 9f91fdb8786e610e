use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("non-finite value at node {node}: {value}")]
    NonFinite { node: usize, value: f64 },
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("discretization failure: {0}")]
    Discretization(String),
    #[error("exponential overflow at node {node} (exponent {exponent})")]
    Overflow { node: usize, exponent: f64 },
    #[error("infeasible start: {0}")]
    Infeasible(String),
    #[error("singular system at pivot {0}")]
    Singular(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
