use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed JSON: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("program {problem_id}: {rule}")]
    Validation { problem_id: String, rule: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot split {groups} problem ids into {k} folds")]
    TooFewGroups { groups: usize, k: usize },

    #[error("program {problem_id} has no mutatable line")]
    Unmutatable { problem_id: String },

    #[error("program {problem_id}: requested {requested} mutated lines but only {available} are mutatable")]
    NotEnoughMutatable {
        problem_id: String,
        requested: usize,
        available: usize,
    },

    #[error("node {node} out of range for graph with {len} nodes")]
    NodeOutOfRange { node: usize, len: usize },

    #[error("external scores for {problem_id}: expected {expected} scores, found {found}")]
    LengthMismatch {
        problem_id: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown problem id {0}")]
    UnknownProblem(String),

    #[error("missing ranking for program {0}")]
    MissingRanking(String),

    #[error("spectra: {0}")]
    Spectra(String),

    #[error("parameter file: {0}")]
    Params(String),

    #[error("dimension mismatch: file has {found}, configuration expects {expected}")]
    DimensionMismatch { found: String, expected: String },

    #[error("non-finite loss {loss} on program {problem_id} (epoch {epoch})")]
    NonFiniteLoss {
        problem_id: String,
        epoch: usize,
        loss: f64,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(problem_id: &str, rule: impl Into<String>) -> Self {
        Error::Validation {
            problem_id: problem_id.to_string(),
            rule: rule.into(),
        }
    }
}
