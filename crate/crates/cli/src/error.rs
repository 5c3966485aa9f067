use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("invalid file at `{path}`: {message}")]
    Model { path: String, message: String },

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Core(hmprate::Error),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn model(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Model { path: path.into(), message: message.into() }
    }

    /// Machine-readable category printed on failure.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Model { .. } => "ModelValidationError",
            CliError::Io(_) => "IoError",
            CliError::Core(e) => e.category(),
        }
    }
}

impl From<hmprate::Error> for CliError {
    fn from(e: hmprate::Error) -> Self {
        match e {
            hmprate::Error::InvalidModel { path, message } => CliError::Model { path, message },
            other => CliError::Core(other),
        }
    }
}
