use std::path::PathBuf;

/// Failure categories of the command-line tool. Each maps to its own exit
/// status so scripts can tell a bad config from a diverged solve.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Schema or value problem in a config file or flag; `field` is the
    /// dotted path of the offending key.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] meltpool_core::Error),

    #[error("offline: {url} is not cached and the download failed ({reason})")]
    Offline { url: String, reason: String },

    #[error("content hash mismatch for {url}: recorded {expected}, found {actual}")]
    HashMismatch {
        url: String,
        expected: String,
        actual: String,
    },

    /// A check ran to completion and did not pass.
    #[error("{0}")]
    Failed(String),
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;

impl AppError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        AppError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        AppError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config { .. } | AppError::Parse { .. } => 2,
            AppError::Model(meltpool_core::Error::Invalid { .. })
            | AppError::Model(meltpool_core::Error::InfeasibleGrading { .. }) => 2,
            AppError::Model(_) => 3,
            AppError::Io { .. } => 4,
            AppError::Offline { .. } | AppError::HashMismatch { .. } => 5,
            AppError::Failed(_) => 1,
        }
    }

    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            1 => "check failed",
            2 => "configuration",
            3 => "solver",
            4 => "io",
            _ => "reference data",
        }
    }
}

/// Attaches a context string to IO results.
pub(crate) trait IoContext<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| AppError::io(what(), e))
    }
}
