use std::path::PathBuf;

use crate::mesh::ValidationReport;
use crate::uv::Algorithm;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(Box<ValidationReport>),

    #[error("mesh is not a topological disk (boundary loops: {boundary_loops})")]
    NotADisk { boundary_loops: usize },

    #[error("{algorithm} failed to produce a parameterization: {reason}")]
    SolverFailure { algorithm: Algorithm, reason: String },

    #[error("vertices {vertices:?} could not be placed from the solved angles")]
    UnplacedVertices { vertices: Vec<usize> },

    #[error("simulation diverged at step {step}")]
    Diverged { step: u64 },

    #[error("degenerate parameterization (faces {faces:?})")]
    DegenerateParameterization { faces: Vec<usize> },

    #[error("mesh carries neither per-vertex intensity nor a texture")]
    MissingTexture,

    #[error("parameterization has no area to rasterize")]
    EmptyParameterization,

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("image of {width}x{height} pixels exceeds the {limit} pixel side limit")]
    ImageTooLarge {
        width: usize,
        height: usize,
        limit: usize,
    },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn solver(algorithm: Algorithm, reason: impl Into<String>) -> Self {
        Error::SolverFailure {
            algorithm,
            reason: reason.into(),
        }
    }

    /// Short machine-readable name of the variant, used in failure records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::Io { .. } => "IoError",
            Error::InvalidMesh(_) => "InvalidMesh",
            Error::NotADisk { .. } => "NotADisk",
            Error::SolverFailure { .. } => "SolverFailure",
            Error::UnplacedVertices { .. } => "UnplacedVertices",
            Error::Diverged { .. } => "Diverged",
            Error::DegenerateParameterization { .. } => "DegenerateParameterization",
            Error::MissingTexture => "MissingTexture",
            Error::EmptyParameterization => "EmptyParameterization",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::ImageTooLarge { .. } => "ImageTooLarge",
        }
    }
}
