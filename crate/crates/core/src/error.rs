use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("grid node {0} lies on the singular set of the datum")]
    NodeOnSingularSet(usize),

    #[error("matrix is not orthogonal (defect {0:.3e})")]
    NotOrthogonal(f64),

    #[error("grid spacing along {0} is not uniform")]
    NonUniformSpacing(String),

    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("Lorentz index constraint violated: {0}")]
    IndexConstraint(String),

    #[error("trajectory not populated up to node {0}")]
    Unpopulated(usize),

    #[error("test function returned a non-finite value on path {path} at ({x:?}, {y:?})")]
    PathNonFinite { path: usize, x: Vec<f64>, y: Vec<f64> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
