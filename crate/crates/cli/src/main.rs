//! `qflow`: run quantum-game learning simulations, diagnose trajectories and
//! run the built-in property suite.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "qflow",
    version,
    about = "Regularized learning dynamics in quantum games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the dynamics and write trajectory.csv, trajectory.json and metadata.json.
    Simulate { manifest: PathBuf },
    /// Write the manifest's diagnostic reports, simulating first if no trajectory exists.
    Diagnose { manifest: PathBuf },
    /// Run the property suite and print a pass/fail table.
    Verify {
        /// Multiply every tolerance by 10.
        #[arg(long)]
        loose: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn configure_threads() -> Result<(), commands::Failure> {
    let Ok(value) = std::env::var("QFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            commands::Failure::usage(format!(
                "QFLOW_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| commands::Failure::usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Simulate { manifest } => commands::simulate(&manifest),
        Command::Diagnose { manifest } => commands::diagnose(&manifest),
        Command::Verify { loose, seed } => commands::verify(loose, seed),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qflow: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
