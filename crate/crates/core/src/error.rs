use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("class {0} has no samples")]
    EmptyClass(String),

    #[error("class {class} has {count} samples, fewer than the {needed} required")]
    TooFewSamples {
        class: usize,
        count: usize,
        needed: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("kernel {0} needs projection weights W")]
    MissingW(&'static str),

    #[error("symmetric eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("labels contain a single class; need at least two")]
    SingleClass,

    #[error("class index {index} out of range for {classes} classes")]
    IndexError { index: usize, classes: usize },

    #[error("expected exactly {expected} classes, got {got}")]
    WrongClassCount { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported schema version {found} (supported: {supported})")]
    ManifestVersionMismatch { found: u32, supported: u32 },

    #[error("checksum mismatch for {0}")]
    ChecksumMismatch(PathBuf),

    #[error("malformed manifest: {0}")]
    Manifest(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
