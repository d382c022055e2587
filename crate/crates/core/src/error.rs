use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not invertible over the integers (det = {0})")]
    NotUnimodular(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("operation not supported for this scenario: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
