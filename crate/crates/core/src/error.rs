use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("value {value} lies outside the support of marginal {index}")]
    OutsideSupport { index: usize, value: f64 },

    #[error("matrix `{0}` is not positive definite")]
    NotPositiveDefinite(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("singular stiffness matrix: {0}")]
    SingularStiffness(String),

    #[error("candidate pool exhausted: every pool point is already in the experimental design")]
    PoolExhausted,

    #[error("bootstrap replicate {replicate} could not be drawn with at least two distinct rows")]
    DegenerateResample { replicate: usize },

    #[error("model evaluation failed at {point:?}: {message}")]
    ModelEvaluation { point: Vec<f64>, message: String },

    #[error("external model protocol error in {}: {message}", batch_dir.display())]
    Protocol { batch_dir: PathBuf, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
