use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite coefficient evaluation at t={t}, x={x:?}")]
    NonFinite { t: f64, x: Vec<f64> },

    #[error("rate index {index}: {reason}")]
    Index { index: usize, reason: String },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("degenerate volatility: {0}")]
    DegenerateVol(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("grid misalignment: {what} = {span} is not a multiple of h = {h}")]
    GridMisalignment { what: String, span: f64, h: f64 },

    #[error("projection onto barrier failed after {iterations} iterations")]
    ProjectionFailure { iterations: usize },

    #[error("insufficient samples: need at least 2, got {0}")]
    InsufficientSamples(u64),

    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
