use thiserror::Error;

/// Errors raised by the library. Data problems and invalid arguments are
/// kept apart so the command line can map them to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("csv: {0}")]
    Csv(String),

    #[error("incomplete record {id}: {field} is absent")]
    IncompleteRecord { id: String, field: &'static str },

    #[error("empty sample")]
    EmptySample,

    #[error("sample too small: need at least {needed} values, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("empty reference class: no record matches {0}")]
    EmptyClass(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("sample generation failed: {0}")]
    Generation(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
