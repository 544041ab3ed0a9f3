//! `ptu`: embed, measure and generate point clouds from the command line.

mod evaluate;
mod generate;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptu_core::graph::KnnRule;
use ptu_core::landmark::LandmarkStrategy;
use ptu_core::pipeline::{Method, PipelineConfig};

#[derive(Parser)]
#[command(name = "ptu", version, about = "Parallel transport unfolding and Isomap embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a point cloud (CSV, one point per row) in `d` dimensions.
    Embed(EmbedArgs),
    /// Write the symmetric geodesic distance matrix.
    Geodesics(GeodesicsArgs),
    /// Sample a synthetic dataset.
    Generate(generate::GenerateArgs),
    /// Compare an embedding or distance matrix against ground truth.
    Evaluate(evaluate::EvaluateArgs),
    /// Per-point neighborhood singular spectra, for picking `d`.
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ptu,
    Isomap,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Union,
    Mutual,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Fps,
    Random,
}

/// Flags shared by every pipeline run.
#[derive(Args)]
struct PipelineArgs {
    /// Input points, one per row.
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "ptu")]
    method: MethodArg,
    /// Graph neighbors per point [default: 4d].
    #[arg(long)]
    k: Option<usize>,
    /// Tangent neighborhood size [default: k].
    #[arg(long = "K")]
    k_tangent: Option<usize>,
    /// Intrinsic (and target) dimension.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_enum, default_value = "union")]
    knn_rule: RuleArg,
    /// Scale unfolded steps to their edge lengths.
    #[arg(long)]
    rescale: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Run manifest path [default: next to the output, `.manifest`].
    #[arg(long)]
    manifest: Option<PathBuf>,
}

impl PipelineArgs {
    fn config(&self, landmarks: usize, strategy: StrategyArg) -> PipelineConfig {
        PipelineConfig {
            method: match self.method {
                MethodArg::Ptu => Method::Ptu,
                MethodArg::Isomap => Method::Isomap,
            },
            k: self.k,
            k_tangent: self.k_tangent,
            d: self.d,
            knn_rule: match self.knn_rule {
                RuleArg::Union => KnnRule::Union,
                RuleArg::Mutual => KnnRule::Mutual,
            },
            landmarks,
            landmark_strategy: match strategy {
                StrategyArg::Fps => LandmarkStrategy::FarthestPoint,
                StrategyArg::Random => LandmarkStrategy::Random,
            },
            rescale: self.rescale,
            seed: self.seed,
            threads: self.threads,
        }
    }
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Embedding CSV, one point per row.
    #[arg(short, long)]
    output: PathBuf,
    /// Eigenvalue sidecar [default: next to the output, `.eigenvalues.csv`].
    #[arg(long)]
    eigenvalues: Option<PathBuf>,
    /// Landmark count, 0 for the full method.
    #[arg(long, default_value_t = 0)]
    landmarks: usize,
    #[arg(long, value_enum, default_value = "fps")]
    landmark_strategy: StrategyArg,
}

#[derive(Args)]
struct GeodesicsArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Distance matrix CSV.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Graph neighbors per point.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Neighborhood size for the spectra [default: k].
    #[arg(long = "K")]
    k_tangent: Option<usize>,
    /// Per-point spectra CSV.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// How a command failed, and so which exit code it gets.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn runtime(stage: &str, err: impl std::fmt::Display) -> Self {
        Failure::Runtime(format!("{stage}: {err}"))
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Embed(a) => run::embed(&a),
        Command::Geodesics(a) => run::geodesics(&a),
        Command::Generate(a) => generate::run(&a),
        Command::Evaluate(a) => evaluate::run(&a),
        Command::Spectrum(a) => run::spectrum(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
