use std::path::PathBuf;

/// Errors produced anywhere in the AWVA pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the domain of a mathematical operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid parameters or configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// Two traces that must share a sampling grid do not.
    #[error("trace grids are not aligned: {0}")]
    Alignment(String),

    #[error("phase calibration failed: {0}")]
    Calibration(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file content.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// Well-formed input whose content violates a format rule (e.g. a
    /// non-uniform time column).
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
