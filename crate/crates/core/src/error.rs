use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty-dataset")]
    EmptyDataset,
    #[error("bad-variable: {0}")]
    BadVariable(String),
    #[error("empty-table")]
    EmptyTable,
    #[error("overlapping-variables")]
    OverlappingVariables,
    #[error("bad-delta: {0} is not in (0, 1)")]
    BadDelta(f64),
    #[error("bad-n: sample count must be positive")]
    BadN,
    #[error("table-mismatch: {0}")]
    TableMismatch(String),
    #[error("not-a-hypothesis: configuration {config:?} maps to several predictions")]
    NotAHypothesis { config: Vec<u32> },
    #[error("bad-input-dim: expected {expected}, got {got}")]
    BadInputDim { expected: usize, got: usize },
    #[error("diverged: non-finite value at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("not-psd: {0}")]
    NotPsd(String),
    #[error("bad-label: {0}")]
    BadLabel(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable short code, used in reports and the Python exception text.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyDataset => "empty-dataset",
            Error::BadVariable(_) => "bad-variable",
            Error::EmptyTable => "empty-table",
            Error::OverlappingVariables => "overlapping-variables",
            Error::BadDelta(_) => "bad-delta",
            Error::BadN => "bad-n",
            Error::TableMismatch(_) => "table-mismatch",
            Error::NotAHypothesis { .. } => "not-a-hypothesis",
            Error::BadInputDim { .. } => "bad-input-dim",
            Error::Diverged { .. } => "diverged",
            Error::NotPsd(_) => "not-psd",
            Error::BadLabel(_) => "bad-label",
            Error::Invalid(_) => "invalid",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
