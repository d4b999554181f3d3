use thiserror::Error;

use crate::geometry::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: invariant violated: {invariant}")]
    Validation { path: String, invariant: String },

    #[error("hard region escapes soft region at {count} grid points")]
    ContainmentViolation { count: usize, points: Vec<Vec3> },

    #[error("invalid frustum: {0}")]
    InvalidFrustum(String),

    #[error("degenerate frustum: acceptance rate {rate:e}")]
    DegenerateFrustum { rate: f64 },

    #[error("loss became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("no exit from the surface before t_max = {t_max}")]
    NoExit { t_max: f64 },

    #[error("empty sample batch")]
    EmptyBatch,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("isosurface is empty")]
    EmptyMesh,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, invariant: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            invariant: invariant.into(),
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Validation { .. } => "ValidationError",
            Error::ContainmentViolation { .. } => "ContainmentViolation",
            Error::InvalidFrustum(_) => "InvalidFrustum",
            Error::DegenerateFrustum { .. } => "DegenerateFrustum",
            Error::NonFinite { .. } => "NonFinite",
            Error::NoExit { .. } => "NoExit",
            Error::EmptyBatch => "EmptyBatch",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::EmptyMesh => "EmptyMesh",
            Error::EmptyInput(_) => "EmptyInput",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
