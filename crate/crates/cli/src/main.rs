//! `qparity`: reproducible analyses of charge-parity switching data.
//!
//! Exit status is 0 on success, 2 for invalid input or configuration and 3
//! when a fit fails to converge or is not identifiable.

mod commands;
mod config;
mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::LoadedConfig;

pub const EXIT_INVALID: u8 = 2;
pub const EXIT_FIT: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::config(format!("{}: {e}", path.display()))
    }
}

impl From<qparity::Error> for CliError {
    fn from(e: qparity::Error) -> Self {
        use qparity::Error as E;
        let fit = e.is_fit_failure() || matches!(e, E::RankDeficient(_) | E::Degenerate(_));
        Self {
            code: if fit { EXIT_FIT } else { EXIT_INVALID },
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qparity", version, about = "Charge-parity switching analysis")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random stream; overrides the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Device id from the bundled tables, e.g. S1-Q1.
    #[arg(long, global = true, value_name = "ID")]
    device: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parity-resolved transition frequencies versus offset charge.
    Spectrum,
    /// Parity lifetime from telegraph traces: PSD fit plus cross-checks.
    FitTp,
    /// Write a simulated telegraph ensemble.
    SimulateRts,
    /// Global fit of parity rate versus temperature.
    ThermalFit,
    /// Radiation impedance, coupling efficiency and predicted parity rate.
    Antenna,
    /// Offset-charge jump catalog and rates.
    Jumps,
    /// Relaxation and echo fits, thermal-photon dephasing, charge noise.
    CoherenceFit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::FitTp => "fit-tp",
            Command::SimulateRts => "simulate-rts",
            Command::ThermalFit => "thermal-fit",
            Command::Antenna => "antenna",
            Command::Jumps => "jumps",
            Command::CoherenceFit => "coherence-fit",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let loaded = LoadedConfig::load(cli.config.as_deref())?;
    let mut cfg = loaded.config;
    if let Some(c) = &cfg.command {
        if c != cli.command.name() {
            return Err(CliError::config(format!(
                "configuration is for `{c}` but `{}` was invoked",
                cli.command.name()
            )));
        }
    }
    cfg.validate_paths()?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out_dir = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("qparity-out"));
    let device = cli.device.or_else(|| cfg.device.clone());
    let out = output::Output::create(&out_dir, cli.command.name(), seed, &loaded.sha256)?;
    let mut ctx = commands::Context {
        config: cfg,
        seed,
        device,
        out,
    };
    commands::dispatch(cli.command, &mut ctx)?;
    for p in ctx.out.written() {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
