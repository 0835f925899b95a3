use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("registry error: {0}")]
    Registry(String),
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("degenerate state (squared norm {0:e})")]
    DegenerateState(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("mode map is not unitary (max deviation {0:e})")]
    NonUnitary(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
