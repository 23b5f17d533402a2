use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] oudw_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// Malformed CSV input. `line` is 1-based and counts the header.
    #[error("line {line}: field `{field}`: {reason}")]
    Csv {
        line: u64,
        field: String,
        reason: String,
    },

    #[error("config line {line}: `{key}`: {reason}")]
    Config { line: usize, key: String, reason: String },

    #[error("output: {0}")]
    Output(String),
}

impl Error {
    pub fn csv(line: u64, field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Csv {
            line,
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn config(line: usize, key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            line,
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// 1 for bad input or arguments, 2 for numeric failures on valid input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) if !e.is_validation() => 2,
            Error::Output(_) => 2,
            _ => 1,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line());
        Error::csv(line, "record", e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Output(e.to_string())
    }
}
