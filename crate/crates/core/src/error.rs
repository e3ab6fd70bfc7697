use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid UTF-8 in {path} at byte {offset}")]
    Decode { path: String, offset: usize },

    #[error("transcript normalizes to an empty query")]
    EmptyQuery,

    #[error("symbol sequence contract violated: {0}")]
    SymbolSeq(String),

    #[error("anchor chain is empty; query cannot be located in the target")]
    LocationFailed,

    #[error("invalid transcript: {0}")]
    Transcript(String),

    #[error("chunks out of order: chunk {index} starts at {start}s before its predecessor")]
    ChunkOrder { index: usize, start: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid toml at {path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error(transparent)]
    Write(#[from] std::io::Error),

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
}
