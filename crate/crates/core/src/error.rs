use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every error names the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus: {0}")]
    Corpus(String),
    #[error("preprocess: {0}")]
    Preprocess(String),
    #[error("lexicon: line {line}: {msg}")]
    LexiconSyntax { line: usize, msg: String },
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("terms: {0}")]
    Terms(String),
    #[error("models: {0}")]
    Model(String),
    #[error("evaluate: {0}")]
    Eval(String),
    #[error("pipeline: {0}")]
    Pipeline(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
