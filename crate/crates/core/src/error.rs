use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Syntax error with 1-based line/column position.
    #[error("{file}:{line}:{column}: {message}")]
    Parse { file: String, line: usize, column: usize, message: String },

    /// A structural invariant was violated.
    #[error("{0}")]
    Validation(String),

    /// No rule activated for the given record; local explanation impossible.
    #[error("no rule activates for record '{patient_id}'")]
    NoActivation { patient_id: String },

    /// Scope of an explanation is empty.
    #[error("explanation scope is empty")]
    EmptyScope,

    /// Requested clustering name is not loaded.
    #[error("unknown clustering '{0}'")]
    UnknownClustering(String),

    #[error("render error: {0}")]
    Render(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, column: usize, message: impl Into<String>) -> Error {
        Error::Parse { file: "<input>".into(), line, column, message: message.into() }
    }

    pub fn with_file(self, file: &str) -> Error {
        match self {
            Error::Parse { line, column, message, .. } => {
                Error::Parse { file: file.to_string(), line, column, message }
            }
            other => other,
        }
    }
}
