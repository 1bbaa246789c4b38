use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("import line {line}: {message}")]
    Import { line: usize, message: String },

    #[error("sample {sample_id}: unknown gold label {label:?}")]
    UnknownGoldLabel { sample_id: String, label: String },

    #[error("sample {sample_id}: {reason}")]
    InvalidSample { sample_id: String, reason: String },

    #[error("embedding file format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at component {index}")]
    NonFinite { index: usize },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("unknown embedding id {0:?}")]
    MissingId(String),

    #[error("document {document_id}: no vector for sentence {index}")]
    MissingSentenceVector { document_id: String, index: usize },

    #[error("sample {0}: document not found")]
    MissingDocument(String),

    #[error("sample {0}: no passage available")]
    MissingPassage(String),

    #[error("sample {0}: no prediction available")]
    MissingPrediction(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("sentence index {index} out of range for {len} sentences")]
    IndexOutOfRange { index: usize, len: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
