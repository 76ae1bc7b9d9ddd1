//! Command-line front end: fitting, causation curves, weight optimization,
//! simulation and exploratory diagnostics over a headered CSV of time series.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;

use clap::{Parser, Subcommand};

pub use config::{CommandKind, ConfigArgs, RunConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "eep", version, about = "Extreme event propagation in multivariate time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit marginals and a stationary vine across Markov orders; persist the selected model.
    Fit(ConfigArgs),
    /// Empirical and synthetic probability-of-causation curves under uniform weights.
    Causation(ConfigArgs),
    /// Maximize a probability of causation over impact weights.
    Optimize(ConfigArgs),
    /// Simulate a path from the fitted model.
    Simulate(ConfigArgs),
    /// Histograms, correlation functions, ADF statistics and extremal correlations.
    Diagnose(ConfigArgs),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Fit(_) => CommandKind::Fit,
            Command::Causation(_) => CommandKind::Causation,
            Command::Optimize(_) => CommandKind::Optimize,
            Command::Simulate(_) => CommandKind::Simulate,
            Command::Diagnose(_) => CommandKind::Diagnose,
        }
    }

    pub fn args(&self) -> &ConfigArgs {
        match self {
            Command::Fit(a) | Command::Causation(a) | Command::Optimize(a) | Command::Simulate(a) | Command::Diagnose(a) => a,
        }
    }
}

/// Runs one subcommand with an already resolved configuration.
pub fn execute(kind: CommandKind, cfg: &RunConfig) -> CliResult<()> {
    match kind {
        CommandKind::Fit => commands::fit::run(cfg),
        CommandKind::Causation => commands::causation::run(cfg),
        CommandKind::Optimize => commands::optimize::run(cfg),
        CommandKind::Simulate => commands::simulate::run(cfg),
        CommandKind::Diagnose => commands::diagnose::run(cfg),
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(cli.command.args())?;
    execute(cli.command.kind(), &cfg)
}
