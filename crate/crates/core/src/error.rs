use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{0}: no connection pairs found")]
    EmptyState(PathBuf),

    #[error("no states found")]
    NoStates,

    #[error("index conflict: {0}")]
    IndexConflict(String),

    #[error("line {line}: entity id {id} is not in the index")]
    UnknownId { id: u32, line: usize },

    #[error("line {line}: entity name {name:?} is not in the index")]
    UnknownName { name: String, line: usize },

    #[error("confidence undefined: antecedent never occurs")]
    UndefinedConfidence,

    #[error("brute-force guard exceeded: {0} distinct ids on one side (limit {1})")]
    GuardExceeded(usize, usize),

    #[error("threshold out of range: {0}")]
    Threshold(String),

    #[error("invalid metric: {0}")]
    Metric(String),

    #[error("count mismatch: {0}")]
    CountMismatch(String),

    #[error("invalid plant spec: {0}")]
    Spec(String),

    #[error("duplicate state label {0:?}")]
    DuplicateLabel(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Usage errors come from bad flags or thresholds; everything else is a
    /// data or format problem.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Threshold(_) | Error::Metric(_))
    }
}
