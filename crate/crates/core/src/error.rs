use thiserror::Error;

use crate::boundary::GeneralPositionReport;

/// Errors raised by the geometric kernel and the computations built on it.
#[derive(Debug, Error)]
pub enum CurvError {
    #[error("degenerate pair: spheres {0} and {1} have coincident centers")]
    DegeneratePair(usize, usize),
    #[error("degenerate triple: {0}")]
    DegenerateTriple(String),
    #[error("tangency within tolerance: {0}")]
    Tangent(String),
    #[error("invalid spherical triangle: sides ({0}, {1}, {2})")]
    InvalidSphericalTriangle(f64, f64, f64),
    #[error("unclosed face boundary: {0}")]
    UnclosedFace(String),
    #[error("general position violated ({} violation(s))", .0.violations.len())]
    GeneralPosition(GeneralPositionReport),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),
    #[error("empty boundary")]
    EmptyBoundary,
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("duplicate point at {location} (coincides with point {first})")]
    DuplicatePoint { location: String, first: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("internal invariant failure: {0}")]
    Internal(String),
}

impl CurvError {
    /// True for errors caused by the input data rather than a bug.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, CurvError::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, CurvError>;
