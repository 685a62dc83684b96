use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use minmax_core::{KernelKind, Loss, NormalizeMode};

/// Min-max kernels, consistent weighted sampling and hashed linear learning.
#[derive(Debug, Parser)]
#[command(name = "minmax", version)]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact kernel matrix in LIBSVM precomputed-kernel format.
    Gram(GramArgs),
    /// Consistent weighted samples of every row of a data file.
    Sketch(SketchArgs),
    /// Turn a sketch file into sparse binary LIBSVM features.
    Encode(EncodeArgs),
    /// Bias and MSE of the collision-rate estimator on pairs of rows.
    Simulate(SimulateArgs),
    /// Fit a linear classifier, choosing lambda on a test set when given.
    Train(TrainArgs),
    /// Accuracy of a saved model.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GramArgs {
    #[arg(long)]
    pub kernel: KernelKind,
    /// Training rows (`-` for stdin).
    #[arg(long)]
    pub train: PathBuf,
    /// Rows to compare against the training rows; defaults to the training rows.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Per-vector normalization applied before the kernel.
    #[arg(long, default_value = "none")]
    pub normalize: NormalizeMode,
    /// Output file (`-` for stdout).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SketchArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    /// Feature dimension shared by every file sketched for one experiment.
    #[arg(long)]
    pub dimension: usize,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "none")]
    pub normalize: NormalizeMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub bi: u32,
    #[arg(long)]
    pub bt: u32,
    /// Sketch file (`-` for stdin).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// File whose lines start with the labels, usually the sketched data file.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output file (`-` for stdout).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Data file; rows 1-2 form pair 1, rows 3-4 pair 2, and so on.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Sample counts, as a range `1..1000`, a list `1,4,16`, or both mixed.
    #[arg(long, default_value = "1..1000")]
    pub k_grid: String,
    /// Comma-separated schemes: `full`, `<n>bit`, or `i<bi>t<bt>`.
    #[arg(long, default_value = "full,0bit,1bit")]
    pub schemes: String,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Dimension used to size the index bits; defaults to the file's.
    #[arg(long)]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Encoded LIBSVM file, or raw data with `--raw`.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, required_unless_present = "raw")]
    pub bi: Option<u32>,
    #[arg(long, required_unless_present = "raw")]
    pub bt: Option<u32>,
    /// Train on the raw feature values instead of encoded samples.
    #[arg(long, conflicts_with_all = ["bi", "bt"])]
    pub raw: bool,
    /// Comma-separated lambdas; more than one needs `--test`.
    #[arg(long)]
    pub lambdas: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "hinge")]
    pub loss: Loss,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Test file in the representation the model was trained on.
    #[arg(long)]
    pub test: PathBuf,
}
