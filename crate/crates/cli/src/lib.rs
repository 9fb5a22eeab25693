//! Command-line front end for `fracfit`.

pub mod args;
pub mod builtin;
pub mod commands;
pub mod error;
pub mod io;
pub mod reproduce;

use args::{Cli, Command};
use error::CliResult;

/// Runs one command and returns the process exit code on success.
pub fn run(cli: &Cli) -> CliResult<u8> {
    match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a)?,
        Command::Orthpoly(a) => commands::cmd_orthpoly(a)?,
        Command::SolveFde(a) => commands::cmd_solve_fde(a)?,
        Command::Price(a) => commands::cmd_price(a)?,
        Command::Noise(a) => commands::cmd_noise(a)?,
        Command::Predict(a) => commands::cmd_predict(a)?,
        Command::Reproduce(a) => {
            return Ok(if reproduce::cmd_reproduce(a)? { 0 } else { 1 });
        }
    }
    Ok(0)
}
