use std::fmt;
use std::io;
use std::path::PathBuf;

#[derive(Debug)]
pub enum HarnessError {
    /// Unknown key, unparsable value, or inconsistent settings.
    Config { line: Option<usize>, message: String },
    Core(tla_core::Error),
    Io { path: PathBuf, source: io::Error },
    Csv(csv::Error),
    /// A checkpoint file that cannot be decoded.
    Checkpoint { path: PathBuf, message: String },
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

impl HarnessError {
    pub fn config(message: impl Into<String>) -> Self {
        HarnessError::Config {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config {
                line: Some(l),
                message,
            } => write!(f, "config line {l}: {message}"),
            HarnessError::Config { line: None, message } => write!(f, "config: {message}"),
            HarnessError::Core(e) => write!(f, "{e}"),
            HarnessError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            HarnessError::Csv(e) => write!(f, "csv: {e}"),
            HarnessError::Checkpoint { path, message } => {
                write!(f, "checkpoint {}: {message}", path.display())
            }
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Core(e) => Some(e),
            HarnessError::Io { source, .. } => Some(source),
            HarnessError::Csv(e) => Some(e),
            _ => None,
        }
    }
}

impl From<tla_core::Error> for HarnessError {
    fn from(e: tla_core::Error) -> Self {
        HarnessError::Core(e)
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Csv(e)
    }
}
