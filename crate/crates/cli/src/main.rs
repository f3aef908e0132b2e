//! `gradrev` — generate toy data, synthesize posed views, train and compare
//! adversarial face-recognition models.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gradrev::experiments::ExperimentMode;

#[derive(Parser, Debug)]
#[command(
    name = "gradrev",
    version,
    about = "Single-sample face recognition with domain-adversarial training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file (sections: data, net, train, synth, matrix)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for data generation and training
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Write per-step loss logs and print progress
    #[arg(short, long, global = true)]
    verbose: bool,

    /// Override any config key, e.g. `--set train.lr=0.02` (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = config::parse_override)]
    overrides: Vec<(String, String)>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the seeded two-domain toy dataset and its split manifest
    GenData(GenDataArgs),
    /// Render virtual posed views of gallery images
    Synth(SynthArgs),
    /// Train one mode and evaluate it on the target test split
    Train(TrainArgs),
    /// Run every mode over several seeds and tabulate the results
    Matrix(MatrixArgs),
    /// Evaluate a saved model on a dataset's test split
    Eval(EvalArgs),
    /// Compare analytic and finite-difference gradients
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
struct GenDataArgs {
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    source_per_class: Option<usize>,
    #[arg(long)]
    target_per_class: Option<usize>,
    /// Degrees
    #[arg(long)]
    shift: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    /// Labeled target samples per class
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Directory of gallery PGM images
    #[arg(long)]
    gallery: PathBuf,
    /// Landmark CSV: image_name,x1,y1,...,x9,y9
    #[arg(long)]
    landmarks: PathBuf,
    /// 3D landmark model (9 lines of x y z)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Pose as yaw,pitch,roll in degrees (repeatable)
    #[arg(long = "poses", value_parser = config::parse_pose, allow_hyphen_values = true)]
    poses: Vec<[f64; 3]>,
    #[arg(long)]
    fit_threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// source-only, source-only-virtual, dan, sspp-dan, semi-dan, semi-sspp-dan or train-on-target
    #[arg(long, value_parser = parse_mode)]
    mode: ExperimentMode,
    /// Dataset written by gen-data; the configured toy is generated when absent
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct MatrixArgs {
    /// Comma-separated training seeds
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Comma-separated subset of modes
    #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
    modes: Vec<ExperimentMode>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// model.json written by train
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    /// Inject a fault; `grl-sign` flips the reversal sign
    #[arg(long, value_parser = ["grl-sign"])]
    corrupt: Option<String>,
}

fn parse_mode(s: &str) -> Result<ExperimentMode, String> {
    s.parse()
}

/// Usage problems exit with 2, everything else with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<gradrev::Error> for Failure {
    fn from(e: gradrev::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
