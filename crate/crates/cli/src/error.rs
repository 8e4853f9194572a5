//! CLI error split: usage problems (bad flags, unreadable paths) exit 1,
//! data and validation problems exit 2.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<evfuse::Error> for CliError {
    fn from(e: evfuse::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<evfuse::defs::ParseError> for CliError {
    fn from(e: evfuse::defs::ParseError) -> Self {
        CliError::Data(e.to_string())
    }
}
