//! `nlkg`: command-line driver for the solver, the scattering operators, the
//! Wick kernels and the acceptance suite.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "nlkg", version, about = "Nonlinear Klein-Gordon scattering and Wick kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized profiles (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
pub enum Command {
    /// Evolve the profile under the nonlinear flow and log diagnostics.
    Evolve,
    /// Apply the wave operators and the scattering map to the profile.
    Scatter,
    /// Evaluate the coherent-state kernel between two profiles.
    Kernel,
    /// Build the one-particle basis and check its kinematics.
    Basis,
    /// Compare the kernel with its perturbative expansion.
    Born,
    /// Run the acceptance suite.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Scatter => "scatter",
            Command::Kernel => "kernel",
            Command::Basis => "basis",
            Command::Born => "born",
            Command::Verify => "verify",
        }
    }
}

/// Process exit status.
pub enum Status {
    Pass,
    InvariantFailure,
    ConfigError,
    NumericalAbort,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> ExitCode {
        ExitCode::from(match s {
            Status::Pass => 0,
            Status::InvariantFailure => 1,
            Status::ConfigError => 2,
            Status::NumericalAbort => 3,
        })
    }
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return Status::ConfigError.into();
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("config error: --threads: must be >= 1");
            return Status::ConfigError.into();
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return Status::NumericalAbort.into();
        }
    }
    commands::run(cli.command, &cfg).into()
}
