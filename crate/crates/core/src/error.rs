use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight spec: {0}")]
    InvalidSpec(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),
    #[error("linear solve did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("too few usable radii: {found} found, {required} required")]
    TooFewRadii { found: usize, required: usize },
    #[error("sample point {0:?} lies outside the source grid")]
    OutOfBox(Vec<f64>),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
