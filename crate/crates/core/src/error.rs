use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Complete positivity fails; carries the signed PSD margin of `V(X,Y) + iΩ`.
    #[error("channel is not completely positive (margin {margin:.3e})")]
    NotCompletelyPositive { margin: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("degenerate certificate: {0}")]
    DegenerateCertificate(String),

    #[error("malformed document: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
