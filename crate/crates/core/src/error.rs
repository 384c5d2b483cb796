use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("query {id} is empty after analysis")]
    EmptyQuery { id: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("duplicate document id: {0}")]
    DuplicateDoc(String),

    #[error("unknown document id: {0}")]
    UnknownDoc(String),

    #[error("shape mismatch: expected dimension {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("cannot aggregate an empty passage score list")]
    EmptyAggregation,

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("document {doc_id} judged in both {first} and {second} qrels")]
    QrelsCollision {
        doc_id: String,
        first: String,
        second: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{} line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("embedding store format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }
}
