use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading, validating or optimizing a recommendation
/// instance.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("non-numeric score at ({row},{col}): {value:?}")]
    NonNumericScore { row: usize, col: usize, value: String },

    #[error("non-finite score at ({row},{col})")]
    NonFiniteScore { row: usize, col: usize },

    #[error("unpartitioned student: {0}")]
    UnpartitionedStudent(String),

    #[error("student {0} appears in the groups file but not in the scores file")]
    UnknownStudent(String),

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("group {0} is empty")]
    EmptyGroup(String),

    #[error("fair distribution row sum for course {row} is {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },

    #[error("negative fair ratio at ({row},{col}): {value}")]
    NegativeRatio { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid k = {k} for {m} courses")]
    InvalidK { k: usize, m: usize },

    #[error("invalid move for student {student}: {reason}")]
    InvalidMove { student: usize, reason: String },

    #[error("index out of bounds: {0}")]
    OutOfBounds(String),

    #[error("empty vector")]
    EmptyVector,

    #[error("every group has already been visited")]
    GroupsExhausted,

    #[error("every course has already been visited")]
    CoursesExhausted,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown course id: {0}")]
    UnknownCourse(String),

    #[error("JSON error in {path}: {message}")]
    Json { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Csv {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
