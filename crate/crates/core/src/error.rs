use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("channel validation failed: {0}")]
    InvalidChannel(String),
    #[error("enumeration table too large: {0}")]
    TableOverflow(String),
    #[error("numerically infeasible: {0}")]
    Infeasible(String),
    #[error("simulation budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
