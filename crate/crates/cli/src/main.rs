//! `rkbs-svm`: train, apply, and stress-test max-margin classifiers in
//! l^(2m/(2m-1))-norm reproducing kernel Banach spaces.
//!
//! Every command is deterministic given its flags, config file, and seed.
//! Exit codes are stable: 0 success, 2 invalid configuration or loss, 3 data
//! or model error, 4 solver divergence, 5 rank condition not satisfied (the
//! check command only).

mod commands;
mod settings;

use clap::{Parser, Subcommand};
use rkbs_svm::Error;

/// Invalid configuration: bad flag values, bad config file, unknown loss.
const EXIT_CONFIG: i32 = 2;
/// Unreadable or malformed dataset or model, or an input outside the
/// kernel's domain.
const EXIT_DATA: i32 = 3;
/// The solver produced a non-finite iterate.
const EXIT_DIVERGED: i32 = 4;
/// The `check` command found the rank condition unsatisfied.
const EXIT_CHECK_FAILED: i32 = 5;

#[derive(Parser)]
#[command(
    name = "rkbs-svm",
    version,
    about = "SVM training in l^(2m/(2m-1))-norm reproducing kernel Banach spaces",
    after_help = "Exit codes: 0 success, 2 invalid configuration, 3 data or model error, \
                  4 solver divergence, 5 rank condition not satisfied (check only)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier and save the model as JSON
    Train(commands::TrainArgs),
    /// Print decision values and predicted labels under a saved model
    Predict(commands::PredictArgs),
    /// Score a saved model on a labeled dataset
    Evaluate(commands::EvaluateArgs),
    /// Test whether the truncated features support a unique minimizer
    Check(commands::CheckArgs),
    /// Run the loss x norm-index x seed benchmark grid
    Benchmark(commands::BenchmarkArgs),
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::UnsupportedPiece(_) => EXIT_CONFIG,
        Error::Data(_) | Error::Domain(_) | Error::Model(_) | Error::Io(_) => EXIT_DATA,
        Error::Divergence(_) => EXIT_DIVERGED,
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Train(args) => commands::cmd_train(args),
        Command::Predict(args) => commands::cmd_predict(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Check(args) => commands::cmd_check(args),
        Command::Benchmark(args) => commands::cmd_benchmark(args),
    };
    let code = match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    std::process::exit(code);
}
