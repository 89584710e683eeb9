use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by configuration, I/O and the public contracts of the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("population is empty; overall utility is undefined")]
    EmptyPopulation,

    #[error("unknown vehicle {0}")]
    UnknownVehicle(u32),

    #[error("child run failed ({label}): {source}")]
    ChildRun {
        label: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parse { .. } => 2,
            Error::Io { .. } => 3,
            Error::ChildRun { .. } => 4,
            Error::Contract(_) | Error::EmptyPopulation | Error::UnknownVehicle(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
