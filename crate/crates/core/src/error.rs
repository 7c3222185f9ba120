use thiserror::Error;

/// Errors raised by the laboratory routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BblError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("time {t} is not before blow-up time {big_t}")]
    PastBlowup { t: f64, big_t: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("quadrature grid too small: {0}")]
    GridTooSmall(String),
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("matrix not strictly diagonally dominant: {0}")]
    NotDiagonallyDominant(String),
    #[error("iteration failed to contract: {0}")]
    NonContraction(String),
    #[error("ansatz window violated: {0}")]
    WindowViolated(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("fit rejected: {0}")]
    FitRejected(String),
    #[error("blow-up detected at t = {t}")]
    BlowUp { t: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, BblError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(BblError::InvalidArgument(msg.into()))
}
