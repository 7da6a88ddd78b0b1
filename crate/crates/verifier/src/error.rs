use harmorph::error::GeometryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl VerifyError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            VerifyError::Usage(_) | VerifyError::Geometry(GeometryError::Sampling(_)) => 2,
            VerifyError::Io(_) => 3,
            VerifyError::Geometry(_) => 1,
        }
    }
}
