use std::path::PathBuf;
use std::process::ExitCode;

use ddm_core::{DdmError, ErrorKind};
use thiserror::Error;

pub const EXIT_ACCEPT: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_REJECT: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config file {path}: {reason}")]
    Config { path: PathBuf, reason: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected header `time,choice`, found `{found}`")]
    Header { path: PathBuf, found: String },
    #[error("{path}, line {line}: {reason}")]
    Record { path: PathBuf, line: u64, reason: String },
    #[error(transparent)]
    Core(#[from] DdmError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Config { .. } | Self::Write { .. } => EXIT_USAGE,
            Self::Read { .. } | Self::Header { .. } | Self::Record { .. } => EXIT_DATA,
            Self::Core(e) => match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numeric => EXIT_NUMERIC,
            },
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
