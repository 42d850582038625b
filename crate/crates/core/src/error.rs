use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("data error: {0}")]
    Data(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("taxonomy error: {0}")]
    Taxonomy(String),
    #[error("annotation error: {0}")]
    Annotation(String),
    #[error("feature error: {0}")]
    Feature(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("balance error: {0}")]
    Balance(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::MissingInput(_) => 2,
            Error::Config(_) => 64,
            _ => 1,
        }
    }
}
