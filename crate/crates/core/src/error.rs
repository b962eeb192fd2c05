use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {details}")]
    ShapeMismatch { op: &'static str, details: String },

    #[error("input too short for {op}: {len} rows < region size {region}")]
    InputTooShort {
        op: &'static str,
        len: usize,
        region: usize,
    },

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("optimizer step on frozen tensor `{0}`")]
    FreezeViolation(String),

    #[error("class count mismatch: source model has {source_classes} classes, target needs {target_classes}")]
    ClassCountMismatch {
        source_classes: usize,
        target_classes: usize,
    },

    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("checkpoint integrity: {0}")]
    Integrity(String),

    #[error("unsupported checkpoint version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attaches a file path to a bare I/O error.
    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
