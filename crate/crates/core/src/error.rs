use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or operation was handed invalid arguments.
    InvalidArgument(String),
    /// Config file parsing / validation failed; all violations are listed.
    Config(Vec<String>),
    /// An iterative solver failed to reach its tolerance.
    SolverFailure(String),
    /// A simulation produced non-finite values; carries the step index.
    BlowUp { step: usize, time: f64 },
    /// I/O error (file-based configs, CSV output).
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Config(violations) => {
                writeln!(
                    f,
                    "invalid configuration ({} problem(s)):",
                    violations.len()
                )?;
                for v in violations {
                    writeln!(f, "  - {v}")?;
                }
                Ok(())
            }
            Error::SolverFailure(msg) => write!(f, "solver failure: {msg}"),
            Error::BlowUp { step, time } => {
                write!(f, "solution blew up at step {step} (t = {time:.6e})")
            }
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::SolverFailure(msg.into())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
