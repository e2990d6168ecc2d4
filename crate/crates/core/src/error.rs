use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the library.
///
/// The CLI maps each variant onto one exit-code class via [`Error::class`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("layer {index} ({layer}): expected width {expected}, found {found}")]
    LayerShape {
        layer: String,
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("softmax over an empty (fully masked) group")]
    EmptySoftmax,

    #[error("invalid label index {0}, expected 0, 1 or 2")]
    InvalidLabel(usize),

    #[error("state error: {0}")]
    State(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("corrupt input: {0}")]
    Corruption(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("ingestion failed for {path}: {message}")]
    Ingest { path: PathBuf, message: String },

    #[error("synthetic generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Load(#[from] LoadError),

    #[error("top-k tie detected: {0}")]
    Tie(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Distinct failure modes when reading a saved model.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("parameter {name}: stored shape {stored:?}, model expects {expected:?}")]
    Shape {
        name: String,
        stored: (usize, usize),
        expected: (usize, usize),
    },

    #[error("payload length mismatch: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("saved config does not match runtime config: {0}")]
    ConfigMismatch(String),

    #[error("missing parameter {0} in saved model")]
    MissingParameter(String),
}

/// Failure class used to pick a process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
    Compatibility,
    Tie,
    Internal,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::Data(_)
            | Error::Ingest { .. }
            | Error::Io { .. }
            | Error::Generation(_)
            | Error::Json(_) => ErrorClass::Data,
            Error::Numeric(_) => ErrorClass::Numeric,
            Error::Load(_) | Error::Corruption(_) => ErrorClass::Compatibility,
            Error::Tie(_) => ErrorClass::Tie,
            _ => ErrorClass::Internal,
        }
    }
}
