//! `nsd` — neonatal seizure detection experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
//! failure.

mod cmd;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "nsd",
    version,
    about = "Neonatal EEG seizure detection: synthetic corpora, SVM and FCNN training, detection, evaluation"
)]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a deterministic synthetic EEG corpus.
    Synth(cmd::SynthArgs),
    /// Train the fully convolutional network for one fold or all folds.
    TrainFcnn(cmd::TrainArgs),
    /// Train the feature-based SVM for one fold or all folds.
    TrainSvm(cmd::TrainArgs),
    /// Emit the per-epoch feature matrix of one recording as CSV.
    Features(cmd::FeaturesArgs),
    /// Run a trained model over a recording and emit trace + mask files.
    Detect(cmd::DetectArgs),
    /// Score trained fold models over a corpus, Table-style CSV out.
    Evaluate(cmd::EvaluateArgs),
    /// Trace high seizure-map activations back to input windows.
    Localize(cmd::LocalizeArgs),
    /// Print architecture, parameter counts and receptive fields.
    InspectModel(cmd::InspectArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = match cli.command {
        Command::Synth(args) => cmd::run_synth(args, cli.seed),
        Command::TrainFcnn(args) => {
            cmd::run_train(args, cli.seed, nsd_core::experiment::Pipeline::Fcnn)
        }
        Command::TrainSvm(args) => {
            cmd::run_train(args, cli.seed, nsd_core::experiment::Pipeline::Svm)
        }
        Command::Features(args) => cmd::run_features(args),
        Command::Detect(args) => cmd::run_detect(args),
        Command::Evaluate(args) => cmd::run_evaluate(args),
        Command::Localize(args) => cmd::run_localize(args),
        Command::InspectModel(args) => cmd::run_inspect(args),
    };

    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

/// Usage problems exit 1, data/format problems 2, numerical failures 3.
fn exit_code(err: &nsd_core::Error) -> i32 {
    use nsd_core::Error;
    match err {
        Error::Config(_) => 1,
        Error::Io { .. } | Error::Format { .. } | Error::Invalid(_) => 2,
        Error::Numeric(_) => 3,
    }
}
