use std::fmt;

/// Process exit codes. These are a stable contract for scripts.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const NON_CONVERGENCE: u8 = 3;
    pub const IDENTIFICATION: u8 = 4;
    pub const STUDY: u8 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: exit::INPUT,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: exit::IO,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<hetfx::Error> for CliError {
    fn from(e: hetfx::Error) -> Self {
        use hetfx::Error;
        let code = match &e {
            Error::Input(_) | Error::Domain(_) => exit::INPUT,
            Error::NonConvergence { .. } | Error::Evaluation { .. } => exit::NON_CONVERGENCE,
            Error::Identification(_) => exit::IDENTIFICATION,
            Error::Study(_) => exit::STUDY,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
