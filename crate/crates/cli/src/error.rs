use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, flags or missing inputs.
    #[error("{0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: survey_clv::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// Interval diagnostics above the threshold in strict mode.
    #[error("{0}")]
    Convergence(String),
}

impl CliError {
    /// 0 success, 2 validation, 3 numerical failure, 4 convergence failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core { source, .. } if source.is_numerical() => 3,
            CliError::Core { .. } => 2,
            CliError::Convergence(_) => 4,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T>;
}

impl<T> Context<T> for std::result::Result<T, survey_clv::Error> {
    fn context(self, what: impl Into<String>) -> Result<T> {
        self.map_err(|source| CliError::Core {
            context: what.into(),
            source,
        })
    }
}

pub fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
