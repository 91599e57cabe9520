//! Command-line driver: resolves a scenario configuration, runs one scenario
//! and writes its results with a checksum manifest.

// `!(x < y)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use clap::{Parser, Subcommand};

mod commands;
pub mod config;
mod error;
pub mod output;

pub use config::{Overrides, ScenarioConfig, Source};
pub use error::{CliError, EXIT_INVALID_CONFIG, EXIT_IO, EXIT_NUMERICAL_GUARD};

#[derive(Debug, Parser)]
#[command(name = "weaktunnel", version, about = "Weak measurements on a tunnelling particle")]
pub struct Cli {
    /// TOML file with scenario keys; flags override it.
    #[arg(long, short = 'c', global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Conditional position distribution of transmitted particles at 20 times.
    Fig2,
    /// Which-path pointer state: moments and difference variance.
    Variance,
    /// Erased and post-selected pointer state against the closed form.
    Erased,
    /// Both pointers shifted with certainty, against the corpuscular bound.
    Certain,
    /// Group delay against barrier width.
    Hartman,
    /// Conditional dwell times in the barrier zones.
    Dwell,
    /// Two weak probes on the faces of the barrier.
    TwoProbe,
    /// Samples from the one-detector-per-particle model.
    CorpuscleSim,
    /// Bootstrap test of pointer pairs against the corpuscular bound.
    CorpuscleTest,
    /// Transmission, reflection and group delay over an energy sweep.
    Scatter,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fig2 => "fig2",
            Command::Variance => "variance",
            Command::Erased => "erased",
            Command::Certain => "certain",
            Command::Hartman => "hartman",
            Command::Dwell => "dwell",
            Command::TwoProbe => "two-probe",
            Command::CorpuscleSim => "corpuscle-sim",
            Command::CorpuscleTest => "corpuscle-test",
            Command::Scatter => "scatter",
        }
    }
}

/// Resolves the configuration: defaults, then the file, then flags.
pub fn resolve(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    cli.overrides.clone().apply(&mut cfg);
    Ok(cfg)
}

fn output_root(cfg: &ScenarioConfig, command: Command) -> PathBuf {
    if let Some(dir) = &cfg.output_dir {
        return dir.clone();
    }
    let base = std::env::var_os(output::OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("weaktunnel-output"));
    base.join(command.name())
}

/// Runs one command and returns its output directory.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let cfg = resolve(cli)?;
    let mut out = output::OutputDir::create(output_root(&cfg, cli.command), cli.command.name(), &cfg.to_toml())?;
    log::info!("{} -> {}", cli.command.name(), out.root().display());
    match cli.command {
        Command::Fig2 => commands::fig2(&cfg, &mut out),
        Command::Variance => commands::variance(&cfg, &mut out),
        Command::Erased => commands::erased(&cfg, &mut out),
        Command::Certain => commands::certain(&cfg, &mut out),
        Command::Hartman => commands::hartman(&cfg, &mut out),
        Command::Dwell => commands::dwell(&cfg, &mut out),
        Command::TwoProbe => commands::two_probe(&cfg, &mut out),
        Command::CorpuscleSim => commands::corpuscle_sim(&cfg, &mut out),
        Command::CorpuscleTest => commands::corpuscle_test(&cfg, &mut out),
        Command::Scatter => commands::scatter(&cfg, &mut out),
    }?;
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse_after_the_subcommand() {
        let cli = Cli::try_parse_from(["weaktunnel", "variance", "--delta", "0.5", "-o", "/tmp/x"]).unwrap();
        let cfg = resolve(&cli).unwrap();
        assert_eq!(cli.command, Command::Variance);
        assert_eq!(cfg.delta, 0.5);
        assert_eq!(output_root(&cfg, cli.command), PathBuf::from("/tmp/x"));
    }

    #[test]
    fn hartman_aliases() {
        let cli = Cli::try_parse_from(["weaktunnel", "hartman", "--e", "0.25", "--d", "10,20"]).unwrap();
        let cfg = resolve(&cli).unwrap();
        assert_eq!((cfg.energy, cfg.widths), (0.25, vec![10.0, 20.0]));
    }
}
