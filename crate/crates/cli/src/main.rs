//! `shl`: kernel self-check, simulation, experiments and rendering.
//!
//! Exit codes: 0 success or pass, 1 numerical failure, 2 usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shl_core::ShlError;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<ShlError> for CliError {
    fn from(e: ShlError) -> Self {
        match e {
            ShlError::InvalidArgument(_) | ShlError::WindowTooSmall { .. } | ShlError::BelowAxis { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("io error: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "shl", version, about = "Stationary Hastings-Levitov growth: simulation and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat TOML file of key = value settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    window: Option<f64>,
    #[arg(long, global = true)]
    replicas: Option<u64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Any other setting, as key=value; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quadrature oracles and slit-map identities.
    KernelCheck,
    /// Sample a realization and write its log, snapshots and manifest.
    Simulate,
    /// Run a Monte Carlo campaign and write its report.
    Experiment {
        /// One of the catalog names, e.g. mean-drift.
        name: String,
    },
    /// Render snapshots of a saved event log.
    Render,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    use toml::Value;
    if let Some(v) = cli.seed {
        cfg.set("seed", Value::Integer(v as i64));
    }
    if let Some(v) = cli.horizon {
        cfg.set("horizon", Value::Float(v));
    }
    if let Some(v) = cli.window {
        cfg.set("window", Value::Float(v));
    }
    if let Some(v) = cli.replicas {
        cfg.set("replicas", Value::Integer(v as i64));
    }
    if let Some(v) = cli.delta {
        cfg.set("delta", Value::Float(v));
    }
    if let Some(v) = &cli.out {
        cfg.set("out", Value::String(v.display().to_string()));
    }
    if let Some(v) = cli.threads {
        cfg.set("threads", Value::Integer(v as i64));
    }
    for a in &cli.set {
        cfg.set_assignment(a)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let cfg = resolve(&cli)?;
    if cfg.has("threads") {
        let n = cfg.u64_or("threads", 0)? as usize;
        if n == 0 {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::KernelCheck => commands::kernel_check(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Experiment { name } => commands::experiment(&name, &cfg),
        Command::Render => commands::render(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
