//! Command-line front end: experiments, training, closed-loop simulation,
//! innovation reconstruction, and trace verification, all driven by JSON
//! configuration files with flag overrides.
//!
//! Exit codes: 0 all requested checks passed, 1 a check failed, 2 the
//! configuration was invalid or an I/O error occurred.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::EXIT_CONFIG_ERROR;

#[derive(Parser)]
#[command(name = "convaug", version, about = "augmented linearly convergent optimizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the configuration's seed(s).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of optimizer steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the per-solve iteration budget.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a (possibly augmented) baseline and verify the requested checks.
    Run(Common),
    /// Meta-train a learned innovation on an instance family.
    Train(Common),
    /// Closed-loop receding-horizon simulation across seeds.
    Mpc(Common),
    /// Reconstruct the innovation turning a baseline into a target trajectory.
    Reconstruct(Common),
    /// Check a stored trace against a decay envelope.
    Verify(Common),
}

fn load<T: serde::de::DeserializeOwned>(path: &PathBuf, expected: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let command = value
        .get("command")
        .and_then(|c| c.as_str())
        .context("config is missing the `command` field")?;
    if command != expected {
        anyhow::bail!("config declares command '{command}', expected '{expected}'");
    }
    Ok(serde_json::from_value(value)?)
}

fn bounded_pool() {
    if let Ok(v) = std::env::var("CONVAUG_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    bounded_pool();
    match cli.command {
        Command::Run(c) => {
            let mut cfg: config::RunConfig = load(&c.config, "run")?;
            if let Some(seed) = c.seed {
                cfg.seeds = vec![seed];
            }
            if let Some(steps) = c.steps {
                cfg.steps = steps;
            }
            if let Some(out) = c.out {
                cfg.out = Some(out);
            }
            commands::cmd_run(&cfg)
        }
        Command::Train(c) => {
            let mut cfg: config::TrainCmdConfig = load(&c.config, "train")?;
            if let Some(seed) = c.seed {
                cfg.seed = seed;
            }
            if let Some(steps) = c.steps {
                cfg.rollout_steps = steps;
            }
            if let Some(out) = c.out {
                cfg.out = Some(out);
            }
            commands::cmd_train(&cfg)
        }
        Command::Mpc(c) => {
            let mut cfg: config::MpcCmdConfig = load(&c.config, "mpc")?;
            if let Some(seed) = c.seed {
                cfg.seeds = vec![seed];
            }
            if let Some(budget) = c.budget {
                cfg.budget = budget;
            }
            if let Some(steps) = c.steps {
                cfg.loop_steps = steps;
            }
            if let Some(out) = c.out {
                cfg.out = Some(out);
            }
            commands::cmd_mpc(&cfg)
        }
        Command::Reconstruct(c) => {
            let mut cfg: config::ReconstructCmdConfig = load(&c.config, "reconstruct")?;
            if let Some(seed) = c.seed {
                cfg.seed = seed;
            }
            if let Some(steps) = c.steps {
                cfg.steps = steps;
            }
            if let Some(out) = c.out {
                cfg.out = Some(out);
            }
            commands::cmd_reconstruct(&cfg)
        }
        Command::Verify(c) => {
            let mut cfg: config::VerifyCmdConfig = load(&c.config, "verify")?;
            if let Some(out) = c.out {
                cfg.out = Some(out);
            }
            commands::cmd_verify(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_CONFIG_ERROR as u8)
        }
    }
}
