use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quaternion: norm {norm} is not within 1e-6 of 1")]
    InvalidQuaternion { norm: f64 },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("pitch window of {len} samples is too short (need at least {needed})")]
    InsufficientWindow { len: usize, needed: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: timestamp {t} does not increase on the previous row")]
    NonMonotone { line: usize, t: f64 },

    #[error("line {line}: quaternion norm {norm} is more than 1e-2 away from 1")]
    QuaternionNorm { line: usize, norm: f64 },

    #[error("unknown dynamic marking {0:?}")]
    UnknownDynamic(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt audio file: {0}")]
    CorruptFile(String),

    #[error("incomplete bundle: {} is missing", .0.display())]
    IncompleteBundle(PathBuf),

    #[error("unsupported bundle format_version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("pairing index ({a}, {b}) out of range for tracks of {len_a} and {len_b} frames")]
    Pairing { a: usize, b: usize, len_a: usize, len_b: usize },

    #[error("the two tracks do not overlap in time")]
    NoOverlap,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{addr}: {source}")]
    Net {
        addr: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn net(addr: impl ToString, source: std::io::Error) -> Self {
        Error::Net { addr: addr.to_string(), source }
    }
}
