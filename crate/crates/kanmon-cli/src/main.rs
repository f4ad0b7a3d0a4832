//! `kanmon` — train, calibrate, evaluate, and compare autoencoder-based
//! process monitors from run-structured CSV data.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "kanmon",
    version,
    about = "Autoencoder process monitoring: synthetic data, training sweeps, \
             fault detection, and Bayesian model comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic plant dataset (train.csv + test.csv)
    Synth(commands::SynthArgs),
    /// Build fault-free training subsets from a dataset
    Prepare(commands::PrepareArgs),
    /// Train monitoring profiles over (variant, size, seed) cells
    Train(commands::TrainArgs),
    /// Score monitoring profiles on test runs into a detection table
    Evaluate(commands::EvaluateArgs),
    /// Bayesian pairwise comparison of variants across training sizes
    Compare(commands::CompareArgs),
    /// Summarize a detection table into per-fault and per-category views
    Report(commands::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::Prepare(args) => commands::prepare(args),
        Command::Train(args) => commands::train(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Compare(args) => commands::compare(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            match error {
                kanmon::Error::Config(_) | kanmon::Error::Contract(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
