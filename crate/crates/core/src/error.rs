use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// An embedding is inconsistent with the logical problem or the hardware graph.
    #[error("invalid embedding: {0}")]
    Embedding(String),

    /// No chain-strength candidate reached the lower strict-embedding threshold.
    #[error("no J_E candidate reaches f_SE >= {threshold}; curve: {curve:?}")]
    RegionNotFound {
        threshold: f64,
        curve: Vec<(f64, f64)>,
    },

    /// A problem-frame energy was requested on a QUBO without a variable partition.
    #[error("problem-frame energy requires a variable partition")]
    MissingPartition,

    /// Spearman correlation is undefined because one side has zero rank variance.
    #[error("correlation undefined: all values tied")]
    UndefinedCorrelation,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad user input rather than internal failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
