//! Command-line front end: argument definitions, the commands, and the
//! verification pipeline they share.
//!
//! Exit codes: 0 success (or the checked property holds), 1 a check failed,
//! 2 bad input.

pub mod args;
pub mod commands;
pub mod pipeline;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or inconsistent input.
    #[error("{0}")]
    Input(String),
    /// The input was fine but a mathematical check did not pass.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<convord::Error> for CliError {
    fn from(e: convord::Error) -> Self {
        use convord::Error::*;
        match e {
            NotCxOrdered | NotIcxOrdered | InternalOrderViolation { .. } | ConstructionFailed(_) => {
                CliError::Failed(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Parse `argv`, run the command and return the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
