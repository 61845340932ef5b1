use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("image is {width}x{height}, need at least {min_width}x{min_height}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },
    #[error("pixel ({row}, {col}) is outside a {width}x{height} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },
    #[error("unknown descriptor method: {0}")]
    UnknownMethod(String),
    #[error("grid {rows}x{cols} is too fine for a {width}x{height} code map")]
    GridTooFine {
        rows: usize,
        cols: usize,
        width: usize,
        height: usize,
    },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature metadata mismatch: {0}")]
    InconsistentFeatureMeta(String),
    #[error("k = {k} exceeds training set size {size}")]
    KTooLarge { k: usize, size: usize },
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("manifest row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("cannot resolve path: {0}")]
    UnresolvablePath(PathBuf),
    #[error("too few samples: {total} samples for {folds} folds")]
    TooFewSamples { total: usize, folds: usize },
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("corrupt record: {0}")]
    CorruptRecord(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{context}: {source}")]
    Annotated {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with a contextual prefix (fold, sample path, ...).
    pub fn annotate(self, context: impl Into<String>) -> Error {
        Error::Annotated {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
