use std::fmt;

use cylspec::Error;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    /// A hypothesis or spectral precondition does not hold for the input.
    Hypothesis(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Hypothesis(_) => 4,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::ConvergenceFailure { .. } | Error::SingularShift { .. } | Error::BracketFailure { .. } => 3,
                Error::NotHyperbolic { .. } | Error::NotRightOfEssential { .. } => 4,
                Error::Io(_) => 1,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Hypothesis(m) => write!(f, "hypothesis failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}
