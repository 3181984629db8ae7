use std::fmt;
use std::path::PathBuf;

/// One invalid config entry, addressed by its dotted path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid config:\n{}", join_fields(.0))]
    Config(Vec<FieldError>),
    #[error("{path}:{line}: {message}")]
    Geometry { path: PathBuf, line: usize, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error(transparent)]
    Core(#[from] lg4nmr_core::Error),
}

impl LabError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        LabError::Io { context: context.into(), source }
    }

    /// Config and geometry problems are the user's to fix (exit code 2);
    /// everything else is a runtime failure (exit code 3).
    pub fn is_config_error(&self) -> bool {
        matches!(self, LabError::Config(_) | LabError::Geometry { .. })
    }
}

fn join_fields(errors: &[FieldError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
