//! Command-line front end for the `qergo` library: identity suites, the
//! direct-measurement Monte Carlo, overlap reconstruction and dynamics checks,
//! each writing a machine-readable report.

pub mod args;
pub mod commands;
pub mod output;

use args::{Cli, Command};
use commands::Outcome;
use output::CliError;

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Check(a) => commands::check(a),
        Command::Direct(a) => commands::direct(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Dynamics(a) => commands::dynamics(a),
    }
}
