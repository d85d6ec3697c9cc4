//! Argument parsing and dispatch for the `ntkt` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Suite};
use crate::config::{ExperimentConfig, SeedSource};
use crate::error::{CliError, Result};
use crate::experiments::Ctx;

#[derive(Debug, Parser)]
#[command(name = "ntkt", version, about = "Transport-map NTK approximation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the constant table and required widths; no sampling.
    Bounds(ConfigArgs),
    /// Build the configured networks and write a run record.
    Build(BuildArgs),
    /// Run a property suite; exits nonzero if any report fails.
    Verify(VerifyArgs),
    /// Sweep widths and smoothing scales; writes one row per trial.
    Sweep(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Seed; overrides the config and the environment.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Multiply every bound by this factor (negative-control hook).
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub corrupt_bounds: f64,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Record wall time in the run record (breaks byte-identical replays).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// gauss, fourier, transport, sampling, networks, rkhs or all.
    #[arg(default_value = "all")]
    pub suite: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub corrupt_bounds: f64,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(args: &ConfigArgs) -> Result<(ExperimentConfig, u64, SeedSource)> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let (seed, source) = match args.seed {
        Some(s) => (s, SeedSource::Flag),
        None => cfg.effective_seed()?,
    };
    Ok((cfg, seed, source))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(crate::config::SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{}={v:?} is not a u64", crate::config::SEED_ENV))),
        Err(_) => Ok(None),
    }
}

/// Runs one command. Returns `false` when a verification report failed.
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Bounds(args) => {
            let (cfg, _, _) = load(&args)?;
            let rows = commands::cmd_bounds(&cfg)?;
            let path = args.out.as_deref().or(cfg.output.as_deref());
            commands::write_bounds_table(&rows, &mut output(path)?)?;
            Ok(true)
        }
        Command::Build(args) => {
            let (cfg, seed, source) = load(&args.common)?;
            let ctx = Ctx::corrupted(seed, args.common.corrupt_bounds);
            let record = commands::cmd_build(&cfg, seed, source, &ctx, args.timing)?;
            let path = args.common.out.as_deref().or(cfg.output.as_deref());
            let mut out = output(path)?;
            if path.is_some_and(|p| p.extension().is_some_and(|e| e == "csv")) {
                commands::write_reports(&record.reports, &mut out)?;
            } else {
                serde_json::to_writer_pretty(&mut out, &record)?;
                writeln!(out)?;
            }
            out.flush()?;
            Ok(record.reports.iter().all(|r| r.pass))
        }
        Command::Verify(args) => {
            let suite: Suite = args.suite.parse()?;
            let seed = match args.seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            let reports = commands::cmd_verify(suite, &Ctx::corrupted(seed, args.corrupt_bounds))?;
            let mut out = output(args.out.as_deref())?;
            commands::write_reports(&reports, &mut out)?;
            out.flush()?;
            let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
            for name in &failed {
                eprintln!("FAIL {name}");
            }
            Ok(failed.is_empty())
        }
        Command::Sweep(args) => {
            let (cfg, seed, _) = load(&args)?;
            let rows = commands::cmd_sweep(&cfg, &Ctx::corrupted(seed, args.corrupt_bounds))?;
            let path = args.out.as_deref().or(cfg.output.as_deref());
            let mut out = output(path)?;
            commands::write_sweep(&rows, &mut out)?;
            out.flush()?;
            Ok(true)
        }
    }
}
