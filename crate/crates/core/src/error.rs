use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
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

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("{record} references unknown {kind} `{id}`")]
    DanglingId {
        record: String,
        kind: &'static str,
        id: String,
    },

    #[error("invalid {what}: {reason}")]
    Invalid { what: String, reason: String },

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("no relevance score for claim `{claim}` and premise `{premise}`")]
    MissingScore { claim: String, premise: String },

    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("cannot compare claim-sim vectors across topics `{left}` and `{right}`")]
    CrossTopic { left: String, right: String },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("bad index file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invalid(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what: what.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
