use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record: {0}")]
    MalformedRecord(String),

    #[error("missing field `{0}`")]
    MissingField(&'static str),

    #[error("bad timestamp: {0}")]
    BadTimestamp(String),

    #[error("n-gram order {n} outside [{min}, {max}]")]
    BadN { n: usize, min: usize, max: usize },

    #[error("k must be at least 1")]
    BadK,

    #[error("unknown gram `{0}`")]
    UnknownGram(String),

    #[error("invalid threshold config: {0}")]
    BadConfig(String),

    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),

    #[error("popularity confirmation required but no oracle was loaded")]
    OracleUnavailable,

    #[error("{path}:{line}: {message}")]
    BadFile {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn bad_file(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::BadFile {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
