//! `ddmem`: run figure presets and configured sweeps, audit convergence and
//! check schedules from the command line.
//!
//! Results go to CSV files; a one-line JSON summary goes to stdout. Failures
//! print `error: {"kind": ..., "message": ...}` to stderr and exit with 2.
//! Checks that run but do not pass exit with 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddmem::error::Error;
use ddmem::experiment::{
    commutation_check, convergence_audit, emit_csv, figure_preset, resolve_numerics, schedule_check, sweep_at,
    ExperimentConfig,
};
use serde_json::json;

/// Overrides the worker count; defaults to the available parallelism.
const THREADS_VAR: &str = "DDMEM_THREADS";

#[derive(Parser)]
#[command(
    name = "ddmem",
    version,
    about = "Memory effects and dynamical decoupling of a qubit in a damped oscillator bath"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a named figure preset and write the records as CSV.
    Figure {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the grid of a configuration file and write the records as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a subsample at a higher cutoff and a halved step.
    Audit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Commutation residual of the kicks with the segment map at every grid point.
    CheckCommute {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check that the kick cycle multiplies to the identity and repeats.
    ValidateSchedule {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Lib(Error),
    Setup(&'static str, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Setup(
            "argument",
            format!("{THREADS_VAR} must be a positive integer, got `{raw}`"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Setup("argument", e.to_string()))
}

fn sweep_to_csv(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let (n_max, steps) = resolve_numerics(cfg)?;
    let records = sweep_at(cfg, n_max, steps)?;
    emit_csv(&records, out)?;
    let flagged = records.iter().filter(|r| !r.consistent()).count();
    println!(
        "{}",
        json!({
            "records": records.len(),
            "out": out.display().to_string(),
            "n_max": n_max,
            "steps_per_segment": steps,
            "bound_violations": flagged,
        })
    );
    Ok(())
}

fn print_report<T: serde::Serialize>(report: &T) -> Result<(), Failure> {
    let text = serde_json::to_string(report).map_err(|e| Failure::Setup("internal", e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    init_threads()?;
    match cli.command {
        Command::Figure { name, out } => sweep_to_csv(&figure_preset(&name)?, &out).map(|()| true),
        Command::Sweep { config, out } => sweep_to_csv(&ExperimentConfig::from_path(&config)?, &out).map(|()| true),
        Command::Audit { config } => {
            let report = convergence_audit(&ExperimentConfig::from_path(&config)?)?;
            print_report(&report)?;
            Ok(report.passed)
        }
        Command::CheckCommute { config } => {
            let report = commutation_check(&ExperimentConfig::from_path(&config)?)?;
            print_report(&report)?;
            Ok(report.passed)
        }
        Command::ValidateSchedule { config } => {
            let report = schedule_check(&ExperimentConfig::from_path(&config)?)?;
            print_report(&report)?;
            Ok(report.valid)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error: {}", json!({ "kind": "usage", "message": first }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            let (kind, message) = match f {
                Failure::Lib(e) => (e.kind(), e.to_string()),
                Failure::Setup(kind, message) => (kind, message),
            };
            eprintln!("error: {}", json!({ "kind": kind, "message": message }));
            ExitCode::from(2)
        }
    }
}
