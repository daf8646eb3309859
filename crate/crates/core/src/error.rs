use thiserror::Error;

/// Errors raised by the validated-numerics pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("intersection of intervals is empty")]
    EmptyIntersection,

    #[error("rigorous bound unavailable: {0}")]
    BoundUnavailable(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("certification failed: {0}")]
    CertificationFailure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
