use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration invariant does not hold. The message names it.
    #[error("invalid config: {0}")]
    Config(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    Dimension {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("invalid id `{0}`: ids must be non-empty and contain no whitespace")]
    InvalidId(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Malformed text input; `line` is 1-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("checksum mismatch in {0}")]
    Checksum(String),

    #[error("{file}: unsupported format version {found} (expected {expected})")]
    Version { file: String, found: u32, expected: u32 },

    /// Structurally invalid or truncated persisted data.
    #[error("corrupt index: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn dim(what: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            expected,
            actual,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl ToString) -> Self {
        Error::Parse {
            line,
            msg: msg.to_string(),
        }
    }

    /// True for failures caused by reading or decoding input data, as opposed
    /// to invalid arguments or configurations.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Parse { .. } | Error::Checksum(_) | Error::Version { .. } | Error::Corrupt(_)
        )
    }
}
