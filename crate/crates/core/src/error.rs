use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bounds violation on `{component}`: {value} outside [{lower}, {upper}]")]
    BoundsViolation {
        component: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid simulation input: {0}")]
    SimulationInput(String),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }

    /// Process exit code for the CLI, one per error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::BoundsViolation { .. } | Error::Contract(_) | Error::SimulationInput(_) => 3,
            Error::Parse { .. } => 4,
            Error::Io { .. } => 5,
            Error::NumericalDegeneracy(_) | Error::DegenerateGeometry(_) => 6,
        }
    }
}
