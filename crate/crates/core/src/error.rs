use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error at {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("frame sequence in {dir} has a gap: expected index {expected}")]
    MissingFrame { dir: PathBuf, expected: usize },

    #[error("frame {index} has dimensions {found:?}, expected {expected:?}")]
    FrameMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("frame {frame}: field {field} = {value} is outside {range}")]
    OutOfRange {
        frame: usize,
        field: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("missing disparity for frame {frame} (K = {k} > 0)")]
    MissingDisparity { frame: usize, k: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
            Error::Dimensions(_) => "dimensions",
            Error::InvalidValue(_) => "invalid-value",
            Error::MissingFrame { .. } => "missing-frame",
            Error::FrameMismatch { .. } => "frame-mismatch",
            Error::OutOfRange { .. } => "out-of-range",
            Error::Parse(_) => "parse",
            Error::LengthMismatch(_) => "length-mismatch",
            Error::MissingDisparity { .. } => "missing-disparity",
            Error::Estimation(_) => "estimation",
            Error::Config(_) => "config",
        }
    }
}
