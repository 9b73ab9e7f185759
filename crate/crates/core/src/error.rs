use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse url {url:?}: {reason}")]
    Url { url: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{file}:{line}: {message}")]
    Schema {
        file: String,
        line: usize,
        message: String,
    },

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("query source exhausted after {issued} queries ({strategy})")]
    QuerySourceExhausted { strategy: String, issued: usize },

    #[error("empty sample store")]
    EmptyStore,

    #[error("no usable queries: {0}")]
    NoUsableQueries(String),

    #[error("no size estimate for collection {0}")]
    MissingSize(String),

    #[error("collection {0} has no sampled documents")]
    EmptySample(String),

    #[error("unknown collection {0}")]
    UnknownCollection(String),

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
