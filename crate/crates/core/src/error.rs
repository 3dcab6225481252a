use std::path::PathBuf;

/// Errors raised by the tensor bandit library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index out of range: {0}")]
    Range(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("{}:{line}: {message}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: None,
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a file path to a parse error that was produced from in-memory text.
    pub fn with_path(self, p: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse { line, message, .. } => Error::Parse {
                path: Some(p.into()),
                line,
                message,
            },
            other => other,
        }
    }

    /// True for errors caused by user-supplied configuration or input files.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
