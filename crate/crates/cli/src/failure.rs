//! Exit-code mapping for library errors.

use std::fmt;

use fairbench::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_DATA: u8 = 4;
pub const EXIT_NUMERIC: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    /// Prefixes the message with the offending file or item.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_USAGE,
        Error::Io { .. } | Error::Format(_) | Error::EmptyInput(_) => EXIT_INPUT,
        Error::Data(_) | Error::Quota { .. } | Error::Shape(_) | Error::Domain(_) => EXIT_DATA,
        Error::Numeric { .. } => EXIT_NUMERIC,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Self { code: exit_code(&err), message: err.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T = ()> = std::result::Result<T, Failure>;
