use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("cost function returned {value} at {params:?}")]
    NonFiniteCost { value: f64, params: Vec<f64> },

    #[error("reference state is separable (E = {0}); a projective witness built on it detects nothing")]
    SeparableReference(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
