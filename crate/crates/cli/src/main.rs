//! `tsformer` — train, evaluate, and inspect the forecasting model.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical divergence,
//! 4 I/O error. Failures print one machine-parseable line to stderr:
//! `tsformer: error: <category>: <message>`.

mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};
use tsformer_core::error::Error;

#[derive(Parser)]
#[command(name = "tsformer", version, about = "Daily demand forecasting with a masked encoder-decoder transformer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic dataset CSV.
    Synth(commands::SynthArgs),
    /// Train a model and write a checkpoint.
    Train(commands::TrainArgs),
    /// Score a checkpoint and baselines with rolling-origin evaluation.
    Evaluate(commands::EvaluateArgs),
    /// Forecast the days after the end of a CSV from a checkpoint.
    Forecast(commands::ForecastArgs),
    /// Train paired with/without-calendar arms and compare.
    Ablate(commands::AblateArgs),
    /// Export averaged attention-weight matrices and heatmaps.
    Attention(commands::AttentionArgs),
    /// Rank hyperparameter combinations by validation MAE.
    Gridsearch(commands::GridArgs),
}

fn run(cli: &Cli) -> tsformer_core::error::Result<()> {
    match &cli.command {
        Command::Synth(args) => commands::cmd_synth(args),
        Command::Train(args) => commands::cmd_train(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Forecast(args) => commands::cmd_forecast(args),
        Command::Ablate(args) => commands::cmd_ablate(args),
        Command::Attention(args) => commands::cmd_attention(args),
        Command::Gridsearch(args) => commands::cmd_gridsearch(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        let (category, code) = match &e {
            Error::Divergence { .. } => ("divergence", 3),
            Error::Io(_) | Error::Csv(_) => ("io", 4),
            _ => ("validation", 2),
        };
        eprintln!("tsformer: error: {category}: {e}");
        std::process::exit(code);
    }
}
