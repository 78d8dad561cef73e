//! `bisim` command-line tool: generate MDPs, solve fixed points, audit
//! estimators, train learners and run the verification suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::Config;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "bisim", version, about = "Bisimulation metrics on Markov decision processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an MDP and a policy, optionally with duplicated states.
    Gen(CommonArgs),
    /// Solve a fixed-point metric.
    Solve(CommonArgs),
    /// Audit a Monte-Carlo estimator against its exact expectation.
    Estimate(CommonArgs),
    /// Train a distance with the stop-gradient loss.
    Learn(CommonArgs),
    /// Run the verification suite.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Root seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// `key=value` overrides, applied after the config file.
    pub overrides: Vec<String>,
}

impl CommonArgs {
    /// File, then positional overrides, then flags.
    pub fn resolve(&self) -> CliResult<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        if let Some(s) = self.seed {
            cfg.set("seed", s.to_string());
        }
        if let Some(o) = &self.out {
            cfg.set("out", o.display().to_string());
        }
        if let Some(w) = self.workers {
            cfg.set("workers", w.to_string());
        }
        if let Some(t) = self.tol {
            cfg.set("tol", t.to_string());
        }
        if let Some(n) = self.samples {
            cfg.set("samples", n.to_string());
        }
        Ok(cfg)
    }
}

type Body = fn(&Config, &mut dyn Write) -> CliResult<()>;

/// Runs one subcommand, writing the human-readable summary to `out`.
pub fn run(command: &Command, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let (args, allowed, body): (&CommonArgs, &[&str], Body) = match command {
        Command::Gen(a) => (a, commands::gen::KEYS, commands::gen::run),
        Command::Solve(a) => (a, commands::solve::KEYS, commands::solve::run),
        Command::Estimate(a) => (a, commands::estimate::KEYS, commands::estimate::run),
        Command::Learn(a) => (a, commands::learn::KEYS, commands::learn::run),
        Command::Verify(a) => (a, commands::verify::KEYS, commands::verify::run),
    };
    let cfg = args.resolve()?;
    cfg.check_keys(allowed)?;
    let workers = match cfg.get::<usize>("workers")? {
        Some(0) => return Err(CliError::config("workers must be positive")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| body(&cfg, out))
}
