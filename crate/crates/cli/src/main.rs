//! `cgs`: deterministic runner for the combinatorial-gauge-symmetry array
//! laboratory.
//!
//! A run is described by a JSON config (see `config.rs` and the README for
//! the schema), dispatched to the core modules, and emitted as CSV/JSON
//! files plus a manifest with SHA-256 digests. Identical (config, seed)
//! pairs produce byte-identical result files at any worker count.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure, 4 size guard.

mod config;
mod output;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cgs_core::{CoreError, FailureKind};
use output::OutputWriter;

#[derive(Parser, Debug)]
#[command(
    name = "cgs",
    version,
    about = "Combinatorial-gauge-symmetry array laboratory"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for result files and the manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads. When absent, the CGS_WORKERS environment variable is
    /// honored; otherwise rayon picks a default. Results are identical at
    /// any worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_SIZE_GUARD: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();

    let workers = cli.workers.or_else(|| {
        std::env::var("CGS_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = workers {
        if n == 0 {
            eprintln!("error: worker count must be positive");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    }

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let config = match config::parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);

    let mut writer = match OutputWriter::new(&cli.out, &config.out_prefix) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    match runner::run(&config, &mut writer, seed) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}: {e:#}", config.command.name());
            let code = match e.downcast_ref::<CoreError>() {
                Some(core) => match core.kind() {
                    FailureKind::InvalidInput => EXIT_CONFIG,
                    FailureKind::SizeGuard => EXIT_SIZE_GUARD,
                    FailureKind::Numeric => EXIT_NUMERIC,
                },
                None => EXIT_NUMERIC,
            };
            return ExitCode::from(code);
        }
    }

    match writer.finish(&config, seed) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: manifest: {e:#}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
