use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::svg::PlotError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{0}")]
    EmptyResult(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Read { .. } | CliError::Write { .. } => 2,
            CliError::EmptyResult(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Write {
            path: path.into(),
            source,
        }
    }
}

impl From<PlotError> for CliError {
    fn from(e: PlotError) -> Self {
        match e {
            PlotError::NonFinite { .. } => CliError::Internal(e.to_string()),
            PlotError::Io(source) => CliError::Write {
                path: PathBuf::from("<plot>"),
                source,
            },
        }
    }
}
