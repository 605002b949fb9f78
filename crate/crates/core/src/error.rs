use thiserror::Error;

/// Errors raised by geometry, objective, line-search and solver routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("tangent vector is not based at the given point")]
    BaseMismatch,

    #[error("retraction failed: {0}")]
    RetractionFailed(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("search direction is not a descent direction (slope {slope:e})")]
    NotDescent { slope: f64 },

    #[error("line search failed ({reason}); last step {alpha:e}")]
    LineSearchFailed { alpha: f64, reason: String },

    #[error("unknown problem kind `{0}`")]
    UnknownProblem(String),

    #[error("no applicable sufficient-descent bound: {0}")]
    NoApplicableBound(String),

    #[error("malformed instance document: {0}")]
    Instance(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(expected: (usize, usize), got: (usize, usize)) -> Error {
    Error::ShapeMismatch {
        expected: format!("{}x{}", expected.0, expected.1),
        got: format!("{}x{}", got.0, got.1),
    }
}
