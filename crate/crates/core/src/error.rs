use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("undefined density: graph has {0} node(s)")]
    UndefinedDensity(usize),

    #[error("no paths: graph has no connected pair of nodes")]
    NoPaths,

    #[error("no walk: graph has no edges")]
    NoWalk,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("not a probability vector: {0}")]
    NotSimplex(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("series of length {len} is shorter than window {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
