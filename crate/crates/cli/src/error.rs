use std::fmt;
use std::path::Path;

use panoscene::Error;

/// Process exit codes.
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = if err.is_io() {
            EXIT_IO
        } else if err.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_INPUT
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
