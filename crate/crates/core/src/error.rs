use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch ({left} vs {right})")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("loss has no supervised nodes")]
    EmptySupervision,

    #[error("backward requires a 1x1 loss, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },

    #[error("need at least 2 labeled nodes to split, found {0}")]
    InsufficientLabels(usize),

    #[error("partition {0} has no training nodes")]
    EmptyTrainSet(usize),

    #[error("evaluation has no scored pixels")]
    EmptyEvaluation,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("manifest field `{field}`: {message}")]
    Manifest { field: String, message: String },

    #[error("{path}: pixel value {value} at ({x}, {y}) is out of range")]
    AnnotationRange {
        path: PathBuf,
        value: u8,
        x: u32,
        y: u32,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("truncated data: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("checkpoint was written for a different configuration")]
    ConfigMismatch,
}

impl Error {
    pub(crate) fn dims(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            op,
            left: format!("{}x{}", left.0, left.1),
            right: format!("{}x{}", right.0, right.1),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
