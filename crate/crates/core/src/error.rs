use std::path::PathBuf;

/// Errors produced by the feature-transform engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file did not follow the expected layout. `offset` is the byte
    /// position where parsing stopped.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("unsupported array shape {0:?}: expected 2 or 3 dimensions")]
    UnsupportedShape(Vec<usize>),

    #[error("{context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("feature map is not centered (largest channel mean {max_mean:e})")]
    NotCentered { max_mean: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("need at least 2 samples, found {found}")]
    InsufficientSamples { found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
