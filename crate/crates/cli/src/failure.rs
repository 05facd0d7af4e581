//! Errors tagged with the process exit code they map to.

use std::fmt;
use std::process::ExitCode;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CmdResult<T> = Result<T, Failure>;

impl Failure {
    /// Bad arguments, unreadable or invalid configuration.
    pub fn usage(message: impl fmt::Display) -> Self {
        Self { code: EXIT_USAGE, error: anyhow::anyhow!("{message}") }
    }

    /// Anything that goes wrong once the inputs were accepted.
    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_RUNTIME, error: error.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

pub trait ResultExt<T> {
    fn usage(self) -> CmdResult<T>;
    fn runtime(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn usage(self) -> CmdResult<T> {
        self.map_err(|e| Failure { code: EXIT_USAGE, error: e.into() })
    }

    fn runtime(self) -> CmdResult<T> {
        self.map_err(|e| Failure { code: EXIT_RUNTIME, error: e.into() })
    }
}
