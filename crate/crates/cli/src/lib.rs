//! Library behind the `emitter-qfi` binary: argument resolution, the
//! subcommands, sweeps and the self-check suite.

pub mod args;
pub mod check;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

use std::io::Write;

pub use args::Cli;
pub use config::Config;
pub use error::{CliError, CliResult};

/// Runs a parsed command line, writing its primary output to `out`.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> CliResult<()> {
    let config = Config::discover(cli.config.as_deref())?;
    match &cli.command {
        args::Command::Closed(a) => commands::cmd_closed(a, &config, out),
        args::Command::Overlap(a) => commands::cmd_overlap(a, &config, out),
        args::Command::Sweep(a) => sweep::cmd_sweep(a, &config, out),
        args::Command::Check(a) => check::cmd_check(a, &config, out),
        args::Command::Oracle(a) => commands::cmd_oracle(a, &config, out),
    }
}
