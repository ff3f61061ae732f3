//! Command implementations behind the `ssg` binary.

pub mod bench;
pub mod commands;

use std::fmt;

use ssg_core::SsgError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

/// A failed command: exit code plus a one-line reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub reason: String,
}

impl CliError {
    pub fn parse(reason: impl fmt::Display) -> Self {
        CliError { code: EXIT_PARSE, reason: reason.to_string() }
    }

    pub fn precondition(reason: impl fmt::Display) -> Self {
        CliError { code: EXIT_PRECONDITION, reason: reason.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self.code {
            EXIT_PARSE => "parse",
            EXIT_GUARD => "oracle-guard",
            _ => "precondition",
        }
    }

    /// The JSON line written to stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "exit": self.code, "reason": self.reason }).to_string()
    }
}

impl From<SsgError> for CliError {
    fn from(e: SsgError) -> Self {
        let code = match e {
            SsgError::OracleGuard(_) => EXIT_GUARD,
            _ => EXIT_PRECONDITION,
        };
        CliError { code, reason: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::parse(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.reason)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
