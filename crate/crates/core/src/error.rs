use thiserror::Error;

/// Errors raised by the sampling, approximation and quadrature routines.
#[derive(Debug, Error)]
pub enum MzqError {
    #[error("basis index ({degree}, {within}) is out of range")]
    IndexOutOfRange { degree: usize, within: usize },

    #[error("point {point:?} lies outside the {domain} domain")]
    OutsideDomain { domain: String, point: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("not an MZ layer at degree {n}: A = {a:e}, B = {b:e}")]
    NotMzLayer { n: usize, a: f64, b: f64 },

    #[error("Voronoi cell of point #{index} at {point:?} received no grid nodes")]
    DegenerateCell { index: usize, point: Vec<f64> },

    #[error("Gram matrix condition number {condition:e} exceeds the solver limit; use a denser layer")]
    IllConditioned { condition: f64 },

    #[error("IRLS did not converge after {iterations} iterations (last objectives: {history:?})")]
    NoConvergence { iterations: usize, history: Vec<f64> },

    #[error("oracle quadrature order {order} is too low for degree {degree}")]
    OracleTooCoarse { order: usize, degree: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MzqError>;
