use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("parity error: {0}")]
    Parity(String),
    #[error("degenerate input: {0}")]
    Degeneracy(String),
    #[error("factorization failed: {0}")]
    Singular(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("consistency check failed: {what} (residual {residual:e})")]
    Consistency { what: String, residual: f64 },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
