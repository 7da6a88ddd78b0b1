use thiserror::Error;

/// Errors raised by the geometry kernel, residual checks and constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {coords:?} is outside the domain of `{field}`")]
    Domain { field: String, coords: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("metric `{metric}` is singular or not positive definite at {coords:?}")]
    SingularMetric { metric: String, coords: Vec<f64> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("frame construction failed: {0}")]
    Frame(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("map is not submersive at {coords:?}")]
    Submersion { coords: Vec<f64> },

    #[error("validation failed: constraint `{constraint}` violated (residual {residual:e} at {worst_point:?})")]
    Validation {
        constraint: String,
        residual: f64,
        worst_point: Vec<f64>,
    },

    #[error("vector field vanishes (|X| = {norm:e}) at {coords:?}")]
    ZeroLocus { norm: f64, coords: Vec<f64> },

    #[error("sampling failed: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;
