//! Command-line front end for `fricke`: argument and config handling,
//! JSON/CSV rendering, and the parallel parameter sweep.

pub mod commands;
pub mod exit;
pub mod options;
pub mod sweep;

use clap::Parser;

use crate::commands::{Outcome, Settings};
use crate::exit::{CliError, CliResult, Code};
use crate::options::Cli;

/// Runs one command line and returns the text to print with its exit code.
pub fn execute<I, T>(argv: I) -> CliResult<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError { code: Code::Definite, message: e.to_string() }
        }
        _ => CliError::input(e.to_string()),
    })?;
    let settings = Settings { flags: cli.flags.resolve()? };
    let outcome = commands::run(cli.command, &settings)?;
    if let Some(path) = &settings.flags.out {
        std::fs::write(path, &outcome.body)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
        return Ok(Outcome { body: String::new(), code: outcome.code });
    }
    Ok(outcome)
}
