use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fragilis::Error),

    #[error("{0}")]
    Usage(String),

    /// A JSON or CSV document that does not parse.
    #[error("{source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for bad input, 3 for a computation that cannot be carried out.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_validation() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
