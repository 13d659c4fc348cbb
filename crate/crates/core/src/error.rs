use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("array must contain at least one element")]
    EmptyArray,
    #[error("degenerate direction vector: {0}")]
    DegenerateDirection(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("invalid wall: {0}")]
    InvalidWall(&'static str),
    #[error("degenerate geometry: evaluation point coincides with antenna element {element}")]
    DegenerateGeometry { element: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("beamforming weights must have unit norm (got {0})")]
    NonUnitWeights(f64),
    #[error("zero channel: beamforming weights undefined")]
    ZeroChannel,
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(&'static str),
    #[error("image too small: {rows}x{cols} for a kernel of size {kernel}")]
    ImageTooSmall {
        rows: usize,
        cols: usize,
        kernel: usize,
    },
    #[error("channel container: {0}")]
    Container(String),
    #[error("scene: {0}")]
    Scene(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Tags an error with the pipeline stage that raised it.
    pub fn at(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

/// Tags an error with the pipeline stage it came from.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
