use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("rejected corpus: {0}")]
    Corpus(String),

    /// A delimited input file had a bad row.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Labeling produced a training set with only one class.
    #[error("training set is single-class (positive ratio {positive_ratio:.4}); adjust the labeling policy thresholds")]
    SingleClass { positive_ratio: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("unsupported file format: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
