use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("construction failed after {rounds} rounds: sup error {sup_error:e} exceeds {tol:e}")]
    ConstructionFailed {
        rounds: u32,
        sup_error: f64,
        tol: f64,
    },
    #[error("capacity exceeded: n = {n} is above the dense cap {cap}")]
    CapacityExceeded { n: usize, cap: usize },
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("query count overflow at level {level}")]
    QueryOverflow { level: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
