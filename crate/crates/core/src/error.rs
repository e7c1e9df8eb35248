use std::path::PathBuf;

/// Errors raised by the solver, its configuration layer and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum WpfpError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape { expected: (usize, usize), found: (usize, usize) },

    #[error("non-finite field after step {step} (t = {time}): {detail}")]
    NonFinite { step: usize, time: f64, detail: String },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
}

pub type Result<T> = std::result::Result<T, WpfpError>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(WpfpError::Config(msg.into()))
}
