use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] pcanet_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed text or binary artifact.
    #[error("format error: {0}")]
    Format(String),
    /// Invalid request from the command line or a config file.
    #[error("usage error: {0}")]
    Usage(String),
    /// Generating or solving sample `index` failed.
    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
