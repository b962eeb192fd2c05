//! The `echotext` command line: dataset tooling (stats, oov, advise, gen),
//! single runs (train, transfer, eval), experiment grids (matrix and the
//! dropout/activation sweeps), and report rendering.
//!
//! Everything is exposed as a library so integration tests can drive
//! commands in-process through [`run`].

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use echotext_core::Error;

pub mod data;
pub mod grids;
pub mod records;
pub mod reporting;
pub mod runs;
pub mod util;

pub use util::{HOLDOUT_STREAM, INIT_STREAM, TRAIN_STREAM, VECTOR_STREAM};

#[derive(Debug, Parser)]
#[command(name = "echotext", version, about = "Train, transfer, and evaluate small text CNNs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize datasets: classes, sentence length, size, vocabulary.
    Stats(data::StatsArgs),
    /// Count target-vocabulary words missing from source vocabularies.
    Oov(data::OovArgs),
    /// Rank candidate source datasets for a transfer target.
    Advise(data::AdviseArgs),
    /// Generate a synthetic labeled corpus.
    Gen(data::GenArgs),
    /// Train a model, from scratch or from a checkpoint under a plan.
    Train(runs::TrainArgs),
    /// Build and save a transferred initialization without training it.
    Transfer(runs::TransferArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(runs::EvalArgs),
    /// Cross-validate every plan against every source ↠ target pair.
    Matrix(grids::MatrixArgs),
    /// Cross-validate one pair across dropout rates.
    SweepDropout(grids::SweepDropoutArgs),
    /// Activation grid with (frozen, fine-tuned) cells.
    SweepActivation(grids::SweepActivationArgs),
    /// Re-render recorded results as text and CSV tables.
    Report(reporting::ReportArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonOpts {
    /// Flat `key = value` config file; CLI flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// One `KEY=VALUE` config override; repeatable, applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Run seed (overrides config file and --set).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap on worker threads for parallel sections.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Float width for model arithmetic.
    #[arg(long, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    #[value(name = "32")]
    F32,
    #[value(name = "64")]
    F64,
}

/// Parses and runs a full argument vector (including argv[0]) and returns
/// the process exit code: 0 success, 2 usage or config trouble, 3 numerical
/// failure during training.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> echotext_core::Result<()> {
    match &cli.command {
        Command::Stats(args) => data::cmd_stats(args),
        Command::Oov(args) => data::cmd_oov(args),
        Command::Advise(args) => data::cmd_advise(args),
        Command::Gen(args) => data::cmd_gen(args),
        Command::Train(args) => runs::cmd_train(args),
        Command::Transfer(args) => runs::cmd_transfer(args),
        Command::Eval(args) => runs::cmd_eval(args),
        Command::Matrix(args) => grids::cmd_matrix(args),
        Command::SweepDropout(args) => grids::cmd_sweep_dropout(args),
        Command::SweepActivation(args) => grids::cmd_sweep_activation(args),
        Command::Report(args) => reporting::cmd_report(args),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFiniteLoss { .. } => 3,
        _ => 2,
    }
}
