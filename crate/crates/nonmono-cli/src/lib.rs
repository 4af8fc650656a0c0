//! Library side of the `nonmono` command-line tool.

use std::io::Write;

use clap::Parser;

pub mod cli;
pub mod commands;
pub mod error;
pub mod json;
pub mod schema;
pub mod trace;

pub use error::{CliError, CliResult};

pub const EXIT_OK: i32 = 0;
/// Certificate check failed, or the run stopped at the iteration limit.
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_PLAN: i32 = 3;
pub const EXIT_INPUT: i32 = 64;
pub const EXIT_RUNTIME: i32 = 70;

pub const SEED_VAR: &str = "NONMONO_SEED";

/// Seed for sampled validators and random start points.
pub fn seed_from(value: Option<&str>) -> CliResult<u64> {
    match value {
        None => Ok(0),
        Some(s) => s
            .trim()
            .parse()
            .map_err(|e| CliError::input(&format!("{SEED_VAR}={s}"), e)),
    }
}

pub fn execute(cli: &cli::Cli, seed: u64, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    use cli::Command::*;
    match &cli.command {
        Solve(a) => commands::solve(a, seed, out, err),
        Window(a) => commands::window(a, out),
        Certify(a) => commands::certify(a, seed, out),
        Spectral(a) => commands::spectral(a, out),
        Export(a) => commands::export(a, out),
    }
}

/// Parses `args`, runs the command and returns the exit code.
pub fn main_with<I, T>(args: I, seed_var: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = seed_from(seed_var).and_then(|seed| execute(&cli, seed, out, err));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
