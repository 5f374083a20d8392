use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
