use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { message: String, line: Option<usize> },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    InsufficientStatistics(String),

    #[error("{0}")]
    Model(hom_core::Error),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            line: None,
        }
    }

    /// Attaches a line number to a config error that has none.
    pub fn at_line(self, line: Option<usize>) -> Self {
        match self {
            CliError::Config { message, line: None } => CliError::Config { message, line },
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Model(_) => 2,
            CliError::Io { .. } => 3,
            CliError::InsufficientStatistics(_) => 4,
        }
    }
}

impl From<hom_core::Error> for CliError {
    fn from(e: hom_core::Error) -> Self {
        match e {
            hom_core::Error::InsufficientCounts(m) => CliError::InsufficientStatistics(format!("insufficient counts: {m}")),
            other => CliError::Model(other),
        }
    }
}
