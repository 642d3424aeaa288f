use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },

    /// A library precondition failed for the value at `location`.
    #[error("{location}: {source}")]
    At {
        location: String,
        #[source]
        source: gbdsde::Error,
    },

    #[error("{location}: {message}")]
    Invalid { location: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] gbdsde::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn at(location: &str, source: gbdsde::Error) -> Self {
        CliError::At { location: location.into(), source }
    }

    pub fn invalid(location: &str, message: String) -> Self {
        CliError::Invalid { location: location.into(), message }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}
