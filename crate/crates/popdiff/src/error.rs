use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("retries exhausted: {0}")]
    RetriesExhausted(String),
    #[error("degenerate Bohr set: {0}")]
    Degenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
