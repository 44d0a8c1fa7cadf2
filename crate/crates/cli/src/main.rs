//! `ccluster`: sweeps, cluster generation, oracle checks and MBQC runs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Compute(#[from] cavity_cluster::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Compute(_) => 1,
            _ => 2,
        }
    }
}

/// Whether a finished run verified what it set out to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetName {
    Cpb,
    Qdot,
    Toroid,
}

#[derive(Debug, Parser)]
#[command(name = "ccluster", version, about = "Cluster states from geometric phases in coupled-cavity arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `out` from the config, else `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed, recorded in every output.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Hardware preset for the feasibility section.
    #[arg(long, global = true, value_enum)]
    preset: Option<PresetName>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pair coupling versus detuning and versus interaction time.
    GammaSweep,
    /// Generate the cluster state and verify it.
    Cluster,
    /// Cross-check the closed forms against brute-force integration.
    OracleVerify,
    /// Run a measurement pattern on a cluster.
    Mbqc {
        /// Pattern file (overrides `[mbqc] pattern`).
        #[arg(long)]
        pattern: Option<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> Result<(RunConfig, PathBuf), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    // pattern paths in a config file are relative to that file
    if let (Some(path), Some(section)) = (&cli.config, config.mbqc.as_mut()) {
        if let Some(p) = section.pattern.as_mut() {
            let dir = path.parent().unwrap_or_else(|| std::path::Path::new(""));
            if std::path::Path::new(p.as_str()).is_relative() && !dir.as_os_str().is_empty() {
                *p = dir.join(&*p).display().to_string();
            }
        }
    }
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(p) = cli.preset {
        let name = match p {
            PresetName::Cpb => "cpb",
            PresetName::Qdot => "qdot",
            PresetName::Toroid => "toroid",
        };
        config.run.preset = Some(name.to_string());
    }
    if let Some(name) = &config.run.preset {
        if cavity_cluster::geomphase::HardwarePreset::by_name(name).is_none() {
            return Err(CliError::Config(format!("[run]: unknown preset {name:?}")));
        }
    }
    if let Some(out) = &cli.out {
        config.run.out = Some(out.display().to_string());
    }
    let out = PathBuf::from(config.run.out.clone().unwrap_or_else(|| ".".to_string()));
    Ok((config, out))
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let (mut config, out) = resolve(&cli)?;
    match cli.command {
        Command::GammaSweep => commands::gamma_sweep(&config, &out),
        Command::Cluster => commands::cluster(&config, &out),
        Command::OracleVerify => commands::oracle_verify(&config, &out),
        Command::Mbqc { pattern } => {
            if let Some(p) = pattern {
                let section = config.mbqc.get_or_insert_with(commands::default_mbqc_section);
                section.pattern = Some(p.display().to_string());
            }
            commands::mbqc(&config, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ccluster: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
