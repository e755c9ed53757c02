use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("backend error: {0}")]
    Backend(String),

    #[error("backend error for {word:?}: {message}")]
    BackendWord { word: String, message: String },

    #[error("span {start}..{end} out of bounds for sentence of {len} chars")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },

    #[error("span text {found:?} does not match word {expected:?}")]
    SpanMismatch { expected: String, found: String },

    #[error("expected exactly one mask placeholder {mask:?}, found {found}")]
    MaskCount { mask: String, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid UTF-8 on line {line}")]
    Encoding { line: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unsupported {what} format: {found}")]
    Format { what: &'static str, found: String },

    #[error("index was built with backend {built:?} but {current:?} is loaded")]
    BackendMismatch { built: String, current: String },

    #[error("no usable index entry for {0:?}")]
    InsufficientData(String),

    #[error("instance mismatch: {0}")]
    Misaligned(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn backend_word(word: &str, err: Error) -> Self {
        match err {
            e @ Error::BackendWord { .. } => e,
            other => Error::BackendWord {
                word: word.to_string(),
                message: other.to_string(),
            },
        }
    }

    /// True for failures raised by a model backend rather than by input data.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            Error::Backend(_) | Error::BackendWord { .. } | Error::BackendMismatch { .. }
        )
    }
}
