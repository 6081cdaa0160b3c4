use oamspec_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_SAMPLING: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical failure, 4 for sampling or grid problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => EXIT_CONFIG,
            Self::Core(e) => match e {
                CoreError::Undersampled { .. } | CoreError::GridMismatch(_) => EXIT_SAMPLING,
                CoreError::OutOfRange(_)
                | CoreError::Degenerate(_)
                | CoreError::Quadrature(_)
                | CoreError::PolarizationSingular { .. } => EXIT_NUMERIC,
                CoreError::InvalidArgument(_)
                | CoreError::DimensionMismatch(_)
                | CoreError::InvalidState(_)
                | CoreError::InvalidSpectrum(_)
                | CoreError::Io(_)
                | CoreError::Csv(_)
                | CoreError::Json(_) => EXIT_CONFIG,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
