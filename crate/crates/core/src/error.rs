use std::fmt;
use std::path::PathBuf;

/// Errors produced by the denoising library.
#[derive(Debug)]
pub enum Error {
    /// A caller-supplied parameter is out of range or inconsistent.
    InvalidParameter(String),
    /// A file could not be read or written.
    Io { path: PathBuf, source: std::io::Error },
    /// A file was readable but its contents are malformed.
    FileFormat { path: PathBuf, detail: String },
}

impl Error {
    /// Shorthand for an [`Error::InvalidParameter`] with the given
    /// message.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Io { path, source } => {
                write!(f, "i/o error on {}: {source}", path.display())
            }
            Error::FileFormat { path, detail } => {
                write!(f, "malformed file {}: {detail}", path.display())
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
