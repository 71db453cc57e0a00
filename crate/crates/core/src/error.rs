use thiserror::Error;

use crate::embeddings::EmbeddingError;
use crate::ontology::OntologyError;
use crate::transport::TransportError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("{file}:{line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver did not converge for {0}")]
    NotConverged(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Process exit code: 1 usage, 2 input, 3 solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Invalid(_) => 1,
            Error::Embedding(_) | Error::Ontology(_) | Error::Format { .. } | Error::Io { .. } => 2,
            Error::Transport(_) | Error::NotConverged(_) => 3,
        }
    }

    pub(crate) fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }

    pub(crate) fn format(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
