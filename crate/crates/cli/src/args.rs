use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "qdeim-pinn",
    version,
    about = "Greedy space-time sampling and PDE coefficient estimation",
    propagate_version = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Directory for all outputs.
    #[arg(long, env = "QDEIM_PINN_OUT_DIR", default_value = ".", global = true)]
    pub out_dir: PathBuf,
    /// JSON config file. Command-line flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Format of tabular outputs.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Write wall-clock times into result files. Off by default so repeated
    /// runs produce identical files; times always go to the manifest.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SnapshotFormatArg {
    MatrixText,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a preset PDE and write the snapshot matrix.
    Generate(GenerateArgs),
    /// Select samples from a snapshot (greedy by default, or --random).
    Sample(SampleArgs),
    /// Fit the network and recover the PDE coefficients.
    Train(TrainArgs),
    /// Greedy sweep over (t_div, eps) pairs, one training run each.
    Sweep(SweepArgs),
    /// Random-sampling baseline over a grid of sample sizes.
    Baseline(BaselineArgs),
    /// k-means summary of (sample count, relative error) pairs.
    Cluster(ClusterArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Preset PDE: allen-cahn, burgers or kdv.
    #[arg(long)]
    pub pde: Option<String>,
    /// Custom feature library as JSON (name, terms, optional true_p).
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    /// Snapshot file. When omitted the snapshot is generated from the preset.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Snapshot file format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub input_format: Option<SnapshotFormatArg>,
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorFlags {
    /// Spatial grid points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Temporal grid points.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Initial condition: zero, gaussian, two-soliton, allen-cahn, sine, random-modes.
    #[arg(long)]
    pub init: Option<String>,
    /// Seed for random initial conditions.
    #[arg(long)]
    pub gen_seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SamplerFlags {
    /// Number of time windows.
    #[arg(long)]
    pub t_div: Option<usize>,
    /// Energy threshold of the rank criterion.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Use sums of squared singular values in the rank criterion.
    #[arg(long)]
    pub squared_energy: bool,
    /// Uniform random samples instead of greedy selection.
    #[arg(long)]
    pub random: bool,
    /// Random sample size.
    #[arg(long)]
    pub size: Option<usize>,
    /// Random sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub base_lr: Option<f64>,
    #[arg(long)]
    pub max_lr: Option<f64>,
    #[arg(long)]
    pub step_size_up: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Network initialization seed.
    #[arg(long)]
    pub train_seed: Option<u64>,
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Layer widths, comma separated, e.g. 2,128,128,128,1.
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    /// Mini-batch size; full batch when omitted.
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub gen: GeneratorFlags,
    /// Output file name inside the output directory (.csv for long format).
    #[arg(long, default_value = "snapshot.txt")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub gen: GeneratorFlags,
    #[command(flatten)]
    pub sampler: SamplerFlags,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub gen: GeneratorFlags,
    #[command(flatten)]
    pub sampler: SamplerFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Train on a sample CSV written by `sample` instead of sampling here.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepFlags {
    /// Time-window counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t_divs: Option<Vec<usize>>,
    #[arg(long)]
    pub eps_min: Option<f64>,
    #[arg(long)]
    pub eps_max: Option<f64>,
    #[arg(long)]
    pub eps_count: Option<usize>,
    /// Worker threads for independent runs.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub gen: GeneratorFlags,
    #[command(flatten)]
    pub sweep: SweepFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub gen: GeneratorFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Smallest sample size; defaults to the greedy sweep minimum.
    #[arg(long)]
    pub min: Option<usize>,
    /// Largest sample size; defaults to the greedy sweep maximum.
    #[arg(long)]
    pub max: Option<usize>,
    /// Repetitions per sample size.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed the per-run seeds derive from.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Threshold range used to derive default sizes.
    #[arg(long)]
    pub eps_min: Option<f64>,
    #[arg(long)]
    pub eps_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    /// Result files from `sweep` (csv or json).
    #[arg(long, required = true, num_args = 1..)]
    pub results: Vec<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub n_init: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// z-score both axes before clustering.
    #[arg(long)]
    pub standardize: bool,
}
