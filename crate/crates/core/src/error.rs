use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("batch must contain at least one item")]
    EmptyBatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("audio clip is empty")]
    EmptyAudio,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("filter length must be odd and >= 3, got {0}")]
    InvalidFilterLen(usize),

    #[error("candidates are not sorted and disjoint at index {0}")]
    UnsortedInput(usize),

    #[error("no threshold for class '{0}'")]
    UnknownClass(String),

    #[error("tuning grid is empty")]
    EmptyGrid,

    #[error("no ground-truth events for {0}")]
    NoTruthEvents(String),

    #[error("class '{0}' lacks positive or negative segments")]
    DegenerateClass(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}:{line}: offset {offset} is not after onset {onset}")]
    InvalidInterval {
        path: PathBuf,
        line: usize,
        onset: f64,
        offset: f64,
    },

    #[error("{path}:{line}: clip '{clip}' expected frame {expected}, got {got}")]
    NonContiguousFrames {
        path: PathBuf,
        line: usize,
        clip: String,
        expected: usize,
        got: usize,
    },

    #[error("{path}:{line}: score {value} outside [0, 1]")]
    ScoreOutOfRange { path: PathBuf, line: usize, value: f64 },

    #[error("wav decoding failed for {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }
}
