use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient evaluation domain: need {needed} scan-region nodes, found {found}")]
    InsufficientDomain { needed: usize, found: usize },

    /// A correlation was requested on a constant vector.
    #[error("degenerate statistic: {0}")]
    DegenerateStatistic(String),

    #[error("strategy ids do not match (missing: [{}], unexpected: [{}])", missing.join(", "), unexpected.join(", "))]
    InputMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("{}:{line}: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool.
    ///
    /// 1 = config/argument error, 2 = missing or mismatched data,
    /// 3 = malformed input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => 1,
            Error::InputMismatch { .. }
            | Error::MissingData(_)
            | Error::InsufficientDomain { .. }
            | Error::DegenerateStatistic(_)
            | Error::Io { .. } => 2,
            Error::Malformed { .. } => 3,
        }
    }
}
