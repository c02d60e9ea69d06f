use thiserror::Error;

/// Errors raised by the library. Each variant maps to a distinct failure class
/// so the CLI can select an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("CM cycle meets the divisor: {0}")]
    Collision(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("calibration failure: {0}")]
    Calibration(String),
    #[error("eta-product condition {condition} fails: {reason}")]
    EtaCondition { condition: u8, reason: String },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
