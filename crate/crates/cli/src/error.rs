use thiserror::Error;

/// Failures mapped onto the documented exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Args(String),

    #[error("cannot read or write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("generation failed: {0}")]
    Generation(qgeo::Error),

    #[error("invalid channel: {0}")]
    Channel(String),

    #[error("solver failed: {0}")]
    Solver(qgeo::Error),

    #[error("expectation violated: {0}")]
    Expectation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Args(_) | CliError::Io { .. } => 2,
            CliError::Generation(_) => 3,
            CliError::Channel(_) => 4,
            CliError::Solver(_) => 5,
            CliError::Expectation(_) => 6,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
