//! The `texsem` command line.
//!
//! [`run_command`] parses an argument vector, runs one subcommand and maps the
//! outcome to an exit code: 0 on success, 2 on a usage error (with the synopsis on
//! standard error) and 1 on any other failure.

mod commands;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use texsem::diagnostics;
use texsem::gan::{Capacity, DEFAULT_NOISE_DIM};
use texsem::learn::DEFAULT_K;
use texsem::synth::DEFAULT_SIZE;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "texsem", version, about = "Texture semantics: label-distribution learning and perceptual GANs")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a procedural texture corpus with its semantic manifest.
    SynthCorpus(SynthCorpusArgs),
    /// Add Gabor features to a manifest.
    ExtractFeatures(ExtractFeaturesArgs),
    /// Fit a label-distribution learner on a featured manifest.
    LdlFit(LdlFitArgs),
    /// Report the six distribution measures for predictions against truths.
    LdlEval(LdlEvalArgs),
    /// Pearson correlation between two vector files.
    Pearson(PearsonArgs),
    /// Pretrain the perceptual regressor on a manifest.
    PretrainPerceptual(PretrainArgs),
    /// Train the conditional GAN jointly with a frozen perceptual regressor.
    TrainJoint(TrainJointArgs),
    /// Train the unconditional baseline GAN.
    TrainDcgan(TrainDcganArgs),
    /// Render images from a generator for rows of a semantics file.
    Generate(GenerateArgs),
    /// Score generated images with a perceptual regressor.
    EvalGenerated(EvalGeneratedArgs),
    /// Finite-difference check of every op and network gradient.
    GradCheck(GradCheckArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SynthCorpus(_) => "synth-corpus",
            Command::ExtractFeatures(_) => "extract-features",
            Command::LdlFit(_) => "ldl-fit",
            Command::LdlEval(_) => "ldl-eval",
            Command::Pearson(_) => "pearson",
            Command::PretrainPerceptual(_) => "pretrain-perceptual",
            Command::TrainJoint(_) => "train-joint",
            Command::TrainDcgan(_) => "train-dcgan",
            Command::Generate(_) => "generate",
            Command::EvalGenerated(_) => "eval-generated",
            Command::GradCheck(_) => "grad-check",
        }
    }
}

#[derive(Debug, Args)]
struct SynthCorpusArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Image side length in pixels (16, 32 or 64).
    #[arg(long, default_value_t = DEFAULT_SIZE)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the images and manifest.tsv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractFeaturesArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 2)]
    scales: usize,
    #[arg(long, default_value_t = 6)]
    orientations: usize,
    /// Accepted for uniformity; extraction is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output manifest; defaults to rewriting the input.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    SaBfgs,
    SaIis,
    AaKnn,
    AaBp,
}

#[derive(Debug, Args)]
struct LdlFitArgs {
    /// Manifest with feature columns.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = Algorithm::SaBfgs)]
    algorithm: Algorithm,
    /// Neighbor count for aa-knn.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Hidden width for aa-bp.
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    /// Adam steps for aa-bp.
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// Iteration cap for sa-bfgs and sa-iis.
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model checkpoint to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LdlEvalArgs {
    /// Model checkpoint from ldl-fit; evaluated on --manifest.
    #[arg(long, requires = "manifest", conflicts_with_all = ["predictions", "truths"])]
    model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    manifest: Option<PathBuf>,
    /// Vector file of predicted distributions, one per line.
    #[arg(long, requires = "truths")]
    predictions: Option<PathBuf>,
    /// Vector file of true distributions, one per line.
    #[arg(long, requires = "predictions")]
    truths: Option<PathBuf>,
    /// Leave pairs with undefined terms out of a measure instead of flooring them.
    #[arg(long)]
    strict: bool,
    /// Accepted for uniformity; evaluation is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file; the report is always printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PearsonArgs {
    /// First vector file, read row-major as one series.
    a: PathBuf,
    /// Second vector file, read row-major as one series.
    b: PathBuf,
    /// Accepted for uniformity; the statistic is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PretrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = Capacity::Small)]
    capacity: Capacity,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Weight of the cosine term; 0 gives the plain quadratic loss.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Use the batch-level cosine term instead of the per-sample mean.
    #[arg(long)]
    cosine_literal: bool,
    /// Hold out the last N manifest rows for validation.
    #[arg(long, default_value_t = 0)]
    validation: usize,
    /// Per-epoch error log (TSV).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perceptual checkpoint to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GanTrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 3000)]
    iterations: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 2e-4)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_NOISE_DIM)]
    noise_dim: usize,
    /// Save the state every N iterations as well as at the end (0 = end only).
    #[arg(long, default_value_t = 0)]
    checkpoint_every: u64,
    /// Continue from a saved training state instead of starting fresh.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Loss trace to write (TSV).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training-state checkpoint to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainJointArgs {
    /// Pretrained perceptual checkpoint; frozen during training.
    #[arg(long, required_unless_present = "resume")]
    perceptual: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    d_steps: usize,
    #[arg(long, default_value_t = 2)]
    g_steps: usize,
    #[command(flatten)]
    common: GanTrainArgs,
}

#[derive(Debug, Args)]
struct TrainDcganArgs {
    #[command(flatten)]
    common: GanTrainArgs,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Training state or generator checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Vector file with one 94-value semantic row per image.
    #[arg(long, required_unless_present = "count")]
    semantics: Option<PathBuf>,
    /// Image count for an unconditional generator without --semantics.
    #[arg(long, conflicts_with = "semantics")]
    count: Option<usize>,
    /// Row i uses noise drawn from seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalGeneratedArgs {
    /// Training state or generator checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Perceptual checkpoint; defaults to the one inside a joint training state.
    #[arg(long)]
    perceptual: Option<PathBuf>,
    /// Vector file of conditioning semantics.
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    semantics: Option<PathBuf>,
    /// Manifest whose semantic rows condition the generator.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Noise draws per semantic row, seeded seed, seed + 1, ...
    #[arg(long, default_value_t = 5)]
    draws: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradCheckArgs {
    #[arg(long, default_value_t = diagnostics::TOLERANCE)]
    threshold: f64,
    #[arg(long, default_value_t = diagnostics::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An invalid combination of otherwise well-formed arguments.
#[derive(Debug)]
pub(crate) struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Outcome of a subcommand that ran to completion.
pub(crate) enum Outcome {
    Success,
    /// The command worked but its check did not pass.
    CheckFailed(String),
}

pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let name = cli.command.name();
    match commands::dispatch(cli.command) {
        Ok(Outcome::Success) => EXIT_OK,
        Ok(Outcome::CheckFailed(msg)) => {
            eprintln!("{name}: {msg}");
            EXIT_FAILURE
        }
        Err(e) => {
            if let Some(u) = e.downcast_ref::<UsageError>() {
                let mut cmd = Cli::command();
                cmd.build();
                let usage = cmd
                    .find_subcommand_mut(name)
                    .map(|c| c.render_usage().to_string())
                    .unwrap_or_default();
                eprintln!("error: {u}\n\n{usage}");
                EXIT_USAGE
            } else {
                eprintln!("error: {e:#}");
                EXIT_FAILURE
            }
        }
    }
}
