use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point ({x}, {y}) lies outside the unit square")]
    OutOfDomain { x: f64, y: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("triangle {index} is degenerate (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose by {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("solution diverged at step {step}")]
    Diverged { step: usize },
    #[error("fixed-point iteration failed at step {step} after {iterations} iterations (last increment {increment:e})")]
    PicardNoConvergence {
        step: usize,
        iterations: usize,
        increment: f64,
    },
    #[error("contour quadrature unresolved: imaginary part {imag:e} for real part {real:e}")]
    ContourResolution { real: f64, imag: f64 },
    #[error("{context}: {source}")]
    Study {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
