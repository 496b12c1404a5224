use std::fmt;
use std::process::ExitCode;

/// A failed command, carrying the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed configuration (exit 1).
    Config(String),
    /// Anything that goes wrong after the configuration was accepted (exit 2).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid config: {msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<dce_core::Error> for CliError {
    fn from(e: dce_core::Error) -> Self {
        match e {
            dce_core::Error::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_error(what: &str, path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Runtime(format!("{what} {}: {e}", path.display()))
}
