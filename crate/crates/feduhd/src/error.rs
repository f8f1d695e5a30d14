use std::path::PathBuf;

/// Failures surfaced by the command line, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The configuration is unreadable, malformed or out of range.
    #[error("config error at `{path}`: {reason}")]
    Schema { path: String, reason: String },

    /// The dataset cannot be loaded or cannot support the experiment.
    #[error("data error: {0}")]
    Data(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] feduhd_core::Error),
}

impl CliError {
    pub fn schema(path: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Schema { path: path.into(), reason: reason.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    pub fn writing(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::io(format!("cannot write {}", path.display()), source)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Data(_) => 3,
            CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }
}

/// Error raised while reading a dataset file.
#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: u64, reason: String },
    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
