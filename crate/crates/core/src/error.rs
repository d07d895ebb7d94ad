use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can signal.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("invalid bounding box: {0}")]
    InvalidBBox(String),
    #[error("point behind camera (z = {0})")]
    PointBehindCamera(f64),
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("nothing visible")]
    EmptyVisibility,
    #[error("degenerate observation: {0}")]
    DegenerateObservation(String),
    #[error("linear system is rank deficient (columns {columns:?})")]
    RankDeficient { columns: Vec<usize> },
    #[error("solved scale {0} is not physical")]
    NonPhysicalScale(f64),
    #[error("solver diverged at iteration {iteration}: object left the view")]
    Diverged { iteration: usize },
    #[error("empty target observation")]
    EmptyObservation,
    #[error("empty mask")]
    EmptyMask,
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("could not place object {object} after {attempts} attempts")]
    PlacementFailed { object: usize, attempts: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("external pose estimator: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
