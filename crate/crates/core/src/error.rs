use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: unknown value {value:?} for field `{field}`")]
    UnknownEnum {
        path: PathBuf,
        line: usize,
        field: String,
        value: String,
    },

    #[error("{path}:{line}: missing required field `{field}`")]
    MissingField {
        path: PathBuf,
        line: usize,
        field: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("none of the seed terms occur in the vocabulary (missing: {missing:?})")]
    NoSeedInVocabulary { missing: Vec<String> },

    #[error("{block} block has dimension {got}, expected {expected}")]
    Dimension {
        block: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite activation in layer `{0}`")]
    NonFinite(&'static str),

    #[error("bad model file: {0}")]
    Format(String),

    #[error("missing artifact {path}; run `{producer}` first")]
    MissingArtifact { path: PathBuf, producer: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
