use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid config field `{field}`: {reason}")]
    Field { field: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] rlif_core::Error),
    #[error("no value snapshot for round {round} in {path}")]
    MissingSnapshot { path: PathBuf, round: usize },
    #[error("{0}")]
    Runtime(String),
}

impl LabError {
    pub fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::Field {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration and usage problems, 2 for
    /// failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config { .. } | LabError::Field { .. } => 1,
            _ => 2,
        }
    }
}
