use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no rows")]
    NoRows,

    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("row {row}: label {label} is not -1 or +1")]
    InvalidLabel { row: usize, label: String },

    #[error("line {line}: indices not increasing")]
    IndicesNotIncreasing { line: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure in {solver}: {message}")]
    Numerical {
        solver: &'static str,
        message: String,
    },

    #[error("non-finite big-M value at instance {0}")]
    NonFiniteBigM(usize),

    #[error("oracle limited to n <= {max_n}, dataset has n = {n}")]
    OracleTooLarge { n: usize, max_n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("duplicate experiment key ({0})")]
    DuplicateKey(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn numerical(solver: &'static str, message: impl Into<String>) -> Self {
        Error::Numerical {
            solver,
            message: message.into(),
        }
    }
}
