use std::fmt;

use fricke::Error;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Code {
    Definite = 0,
    Inconclusive = 2,
    Input = 3,
    Resource = 4,
}

impl Code {
    pub fn as_i32(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: Code,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn input(message: impl Into<String>) -> CliError {
        CliError { code: Code::Input, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Exit code for a library error.
pub fn code_of(e: &Error) -> Code {
    match e {
        Error::Overflow | Error::DepthLimit { .. } | Error::ResourceLimit(_) => Code::Resource,
        Error::OracleUnavailable(_) | Error::RankDeficient(_) => Code::Inconclusive,
        Error::InvalidSlope { .. }
        | Error::NotAdjacent(..)
        | Error::InvalidTriangle(..)
        | Error::InvalidArgument(_)
        | Error::SingularTrace(_)
        | Error::SingularTerm(_)
        | Error::NotAnosov { .. }
        | Error::NotFixed { .. }
        | Error::Parse(_) => Code::Input,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError { code: code_of(&e), message: e.to_string() }
    }
}
