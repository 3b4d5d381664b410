use std::path::PathBuf;

use crate::geometry::CameraId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point maps to the line at infinity")]
    DegeneratePoint,
    #[error("homography is singular or non-finite")]
    Singular,
    #[error("invalid bounding box: {0}")]
    InvalidBox(String),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("cost matrix is empty")]
    EmptyMatrix,
    #[error("cost matrix is malformed: {0}")]
    MalformedMatrix(String),
    #[error("no homography for camera {0}")]
    MissingHomography(CameraId),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("agreement {0} outside [0, 1]")]
    InvalidAgreement(f64),
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("empty input")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("schema error at frame {frame}: {msg}")]
    Schema { frame: usize, msg: String },
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
