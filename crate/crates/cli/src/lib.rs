//! The `resyduo` command line: one subcommand per pipeline stage.

pub mod args;
mod commands;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use resyduo_core::Error as CoreError;
use resyduo_service::ServiceError;

pub use args::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(CoreError::Io(e))
    }
}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

fn core_code(e: &CoreError) -> u8 {
    match e {
        CoreError::InvalidArgument(_) => EXIT_USAGE,
        CoreError::ModelState(_) => EXIT_INTERNAL,
        _ => EXIT_DATA,
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => core_code(e),
            CliError::Service(ServiceError::Core(e)) => core_code(e),
            CliError::Service(ServiceError::InvalidRequest(_)) => EXIT_USAGE,
            CliError::Service(_) => EXIT_DATA,
        }
    }
}

/// Parses `argv` and runs the selected subcommand. Results go to standard
/// output, diagnostics to standard error.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
