//! `qplab <subcommand> --config <path> [--out <dir>] [--workers <k>]`
//!
//! Exit codes: 0 success, 1 invariant/conclusion violation or runtime
//! failure, 2 config error. CSV/JSON artifacts are byte-deterministic for a
//! given config regardless of the worker count.

mod config;
mod output;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

#[derive(Parser)]
#[command(name = "qplab", version, about = "Quasi-periodic operator laboratory")]
struct Cli {
    /// Experiment to run: green, shiftscan, ldt, avgdet, cartan, sublevel,
    /// pave, patch, badset, orbit, localize, dioph
    subcommand: String,
    /// Path to the run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output] dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides [experiment] workers; defaults to all cores)
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let config = match config::parse_config(&text, &cli.subcommand) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };

    let workers = cli
        .workers
        .or(config.workers)
        .unwrap_or_else(num_cpus_available);
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();

    let outcome = match runner::run(&config) {
        Ok(outcome) => outcome,
        Err(message) => {
            eprintln!("{}: {message}", cli.subcommand);
            return ExitCode::from(1);
        }
    };

    let hash = output::config_hash(text.as_bytes());
    let out_dir = cli
        .out
        .unwrap_or_else(|| PathBuf::from(&config.out_dir));
    if let Err(e) = output::write_artifacts(&out_dir, &cli.subcommand, &hash, &outcome) {
        eprintln!("{}: cannot write artifacts: {e}", cli.subcommand);
        return ExitCode::from(1);
    }

    // volatile run facts stay out of the artifacts to keep them
    // byte-deterministic
    println!(
        "{}: {} rows, {} violations, workers={workers}, wall={:.3}s, out={}",
        cli.subcommand,
        outcome.rows.len(),
        outcome.violations.len(),
        started.elapsed().as_secs_f64(),
        out_dir.display(),
    );
    for violation in &outcome.violations {
        eprintln!("violation: {violation}");
    }
    if outcome.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn num_cpus_available() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
