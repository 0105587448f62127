//! The `socialpose` command line: synthetic data, training, evaluation and prediction.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 numerical
//! failure.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use socialpose_core::model::Variant;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "socialpose", version, about = "Joint global motion and pose forecasting experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic scenes and a split manifest.
    Generate(GenerateArgs),
    /// Check scene files, scene directories (with their split manifest) or a config.
    Validate(ValidateArgs),
    /// Train a model; writes model.ckpt, history.csv and config.toml.
    Train(TrainArgs),
    /// Score baselines and checkpoints on a split; writes horizon, curve and group tables.
    Evaluate(EvaluateArgs),
    /// Forecast one scene with a checkpoint and write the future as a scene file.
    Predict(PredictArgs),
    /// Compare analytic and numeric gradients for every variant at toy sizes.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// approach, react, mirror or independent.
    pub scenario: String,
    /// Number of scenes; scene i uses seed + i.
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short, default_value = "data")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub frames: usize,
    /// posetrack14, ntu13 or minimal3.
    #[arg(long, default_value = "posetrack14")]
    pub joint_set: String,
    /// Persons per scene for the independent scenario.
    #[arg(long, default_value_t = 2)]
    pub persons: usize,
    /// Attach a per-frame raw context sequence of this size.
    #[arg(long)]
    pub context_dim: Option<usize>,
    /// Split fractions, as decimals or ratios such as 4/6.
    #[arg(long, default_value = "0.6", value_parser = commands::parse_fraction)]
    pub train: f64,
    #[arg(long, default_value = "0.2", value_parser = commands::parse_fraction)]
    pub val: f64,
    #[arg(long, default_value = "0.2", value_parser = commands::parse_fraction)]
    pub test: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub paths: Vec<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Config override, `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Config override, `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Do not print per-epoch progress.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Config override, `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Checkpoint to score as the `model` method, optionally `label=path`; repeatable.
    #[arg(long)]
    pub checkpoint: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated method list.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Context provider: zero, scene, or a feature file.
    #[arg(long, default_value = "zero")]
    pub context: String,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seeds per variant.
    #[arg(long, default_value_t = 10)]
    pub count: u64,
    /// Print every case, not only failures.
    #[arg(long, short)]
    pub verbose: bool,
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Validate(a) => commands::validate(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Predict(a) => commands::predict(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
