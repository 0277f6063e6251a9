mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use snore_core::evaluation::{ExperimentKind, SelectionMode};

#[derive(Parser, Debug)]
#[command(name = "snorekit", version, about = "Snore and OSA-related snore classification from nocturnal audio")]
struct Cli {
    /// Pipeline configuration (JSON); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker thread cap (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled synthetic corpus.
    Synth(SynthArgs),
    /// Spectral-subtraction denoising of one WAV file.
    Denoise(DenoiseArgs),
    /// Window every recording in a directory and write the feature table.
    Extract(ExtractArgs),
    /// Leave-one-patient-out evaluation of one experiment.
    Evaluate(EvaluateArgs),
    /// Fit a deployable model.
    Train(TrainArgs),
    /// Apply a saved model to an unlabeled recording.
    Classify(ClassifyArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Full synthesis spec (JSON); the flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    patients: Option<usize>,
    /// Windows per class per patient.
    #[arg(long)]
    windows: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    input: PathBuf,
    output: PathBuf,
    /// Clean reference; prints SNR before and after.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Directory of `<patient_id>.wav` files.
    #[arg(long)]
    wav_dir: PathBuf,
    /// Label CSV. Without it windows are written unlabeled.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    experiment: ExperimentKind,
    #[arg(long, default_value = "forward")]
    selection: SelectionMode,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    features: PathBuf,
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Bootstrap resamples for confidence intervals.
    #[arg(long)]
    ci_resamples: Option<usize>,
    /// Directory for `<experiment>-<selection>.json` and `.csv`.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    features: PathBuf,
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Leave this patient out, reproducing its evaluation fold.
    #[arg(long)]
    exclude_patient: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    model: PathBuf,
    wav: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the WAV file stem.
    #[arg(long)]
    patient_id: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
