use std::path::PathBuf;

/// Errors raised anywhere in the imaging pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An index or numeric parameter outside its allowed range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Inputs that violate a type invariant (geometry, scene, config, grids).
    #[error("validation error: {0}")]
    Validation(String),

    /// The image holds no energy, so no target can be located.
    #[error("no target: {0}")]
    NoTarget(String),

    /// The edge profile does not bracket a target on both sides.
    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; `record` is the 1-based line number.
    #[error("parse error in {path} at line {record}: {message}")]
    Parse {
        path: PathBuf,
        record: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, record: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            record,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 validation, 3 I/O, 4 degenerate analysis.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Validation(_) | Error::Parse { .. } => 2,
            Error::Io { .. } => 3,
            Error::NoTarget(_) | Error::DegenerateProfile(_) => 4,
        }
    }
}
