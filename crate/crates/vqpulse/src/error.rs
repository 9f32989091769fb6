use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] vqpulse_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("fidelity {fidelity} below required {required}")]
    BelowThreshold { fidelity: f64, required: f64 },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable identifier printed in the error line.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io { .. } => "io",
            CliError::Format { .. } => "format",
            CliError::Config { .. } => "config",
            CliError::Usage(_) => "usage",
            CliError::BelowThreshold { .. } => "below-threshold",
        }
    }

    /// Single-line `error[code]: message` rendering for standard error.
    pub fn error_line(&self) -> String {
        let message = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.code(), message)
    }
}

pub type CliResult<T> = Result<T, CliError>;
