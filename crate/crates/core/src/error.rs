/// Error type shared by every module in the crate.
///
/// The three variants map onto the process exit codes used by the command
/// line tool: invalid input or configuration (exit 1), numerical failure
/// (exit 2), and I/O or serialization trouble (exit 1).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input data or configuration violates a precondition.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A computation failed numerically (rank deficiency, non-finite
    /// intermediate, failed convergence where convergence is required).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// File access or serialization failed.
    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
