use std::fmt;
use std::path::Path;

/// A data error: reported as `error[Code]: message` with exit status 1.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::new("Io", format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl From<propagate_core::Error> for CliError {
    fn from(e: propagate_core::Error) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

impl From<propagate_service::ServiceError> for CliError {
    fn from(e: propagate_service::ServiceError) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

/// Lifts any module error into a [`CliError`] through the crate-wide error.
pub fn core<E: Into<propagate_core::Error>>(e: E) -> CliError {
    e.into().into()
}

pub type Result<T> = std::result::Result<T, CliError>;
