use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] nsp_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("criterion failed: {0}")]
    Criterion(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for bad input, 1 for everything that failed while running.
    pub fn exit_code(&self) -> i32 {
        use nsp_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(
                E::DimensionMismatch { .. }
                | E::IndexOutOfRange { .. }
                | E::InvalidParameter { .. }
                | E::UnknownMeasure(_)
                | E::MeasureSpec { .. }
                | E::MatrixParse { .. }
                | E::TooManySupports { .. }
                | E::Unsupported { .. }
                | E::Json(_),
            ) => 2,
            CliError::Core(_) | CliError::Io { .. } | CliError::Criterion(_) => 1,
        }
    }
}
