use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the mapping pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("non-finite coordinate at point {index}")]
    NonFiniteCoordinate { index: usize },

    #[error("zero-length ray at point {index}")]
    ZeroLengthRay { index: usize },

    #[error("frame count mismatch: points reference {frames} frames, pose file has {poses}")]
    FrameMismatch { frames: usize, poses: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sensor {index} lies inside the scene")]
    SensorInside { index: usize },

    #[error("cell index {cell:?} outside the Morton range [0, 2^21)")]
    MortonRange { cell: [i64; 3] },

    #[error("non-finite value at {context}")]
    NonFinite { context: String },

    #[error("non-finite loss at step {step}: {breakdown}")]
    NonFiniteLoss { step: usize, breakdown: String },

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("non-manifold edges (3 or more incident faces): {0:?}")]
    NonManifold(Vec<(u32, u32)>),

    #[error("zero-area faces: {0:?}")]
    ZeroArea(Vec<usize>),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("config error at key `{key}`: {msg}")]
    Config { key: String, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::NonFiniteCoordinate { .. } => "non_finite_coordinate",
            Error::ZeroLengthRay { .. } => "zero_length_ray",
            Error::FrameMismatch { .. } => "frame_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SensorInside { .. } => "sensor_inside",
            Error::MortonRange { .. } => "morton_range",
            Error::NonFinite { .. } => "non_finite",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Mismatch(_) => "mismatch",
            Error::NonManifold(_) => "non_manifold",
            Error::ZeroArea(_) => "zero_area",
            Error::Empty(_) => "empty",
            Error::Config { .. } => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
