//! Batch driver for the room-acoustics augmentation pipeline.
//!
//! `simulate` samples rooms and writes impulse responses; `augment` builds
//! reverberant-noisy training sets or reverberant test sets from an anechoic
//! corpus; `train` fits the frame-level voice-activity classifier;
//! `evaluate` scores a manifest; `report` joins evaluations into the
//! anechoic-vs-augmented comparison grid.
//!
//! Parameters come from flags or from a JSON run config (`--config`,
//! exclusive with parameter flags). Every run echoes its fully resolved
//! config into the output directory, so `--config <out>/config.json`
//! reproduces it bit for bit. `--jobs` only sizes the thread pool; outputs
//! never depend on it. Exit codes: 0 ok, 2 bad arguments or config, 1
//! runtime failure.

mod cmd;
mod config;
mod util;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Args)]
pub struct CommonArgs {
    /// Output directory [default: $REVAD_OUT_ROOT/<subcommand>]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 = one per core. Never affects output bytes.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// JSON run config; exclusive with the parameter flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Parser)]
#[command(
    name = "revad",
    version,
    about = "Simulate room impulse responses, augment speech corpora, and \
             train/evaluate a frame-level voice-activity classifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample scenarios and write their impulse responses
    Simulate(cmd::simulate::SimulateArgs),
    /// Build a training or test set from an anechoic corpus
    Augment(cmd::augment::AugmentArgs),
    /// Fit the frame classifier on an augmented manifest
    Train(cmd::train::TrainArgs),
    /// Score a manifest with a trained model
    Evaluate(cmd::evaluate::EvaluateArgs),
    /// Join evaluations into the condition × environment grid
    Report(cmd::report::ReportArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd::simulate::run(args),
        Command::Augment(args) => cmd::augment::run(args),
        Command::Train(args) => cmd::train::run(args),
        Command::Evaluate(args) => cmd::evaluate::run(args),
        Command::Report(args) => cmd::report::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
