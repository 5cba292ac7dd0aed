use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file. `location` names a byte offset or a line number.
    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format_at_byte(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            location: format!("byte offset {offset}"),
            message: message.into(),
        }
    }

    pub(crate) fn format_at_line(line: u64, message: impl Into<String>) -> Self {
        Error::Format {
            location: format!("line {line}"),
            message: message.into(),
        }
    }

    pub(crate) fn arg(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }

    /// Short machine-readable kind, used by the command line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Format { .. } => "format",
            Error::Argument(_) => "argument",
            Error::Dimension { .. } => "dimension",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}
