use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "kcover", version, about = "Random k-coverage experiments on the flat torus")]
pub struct Cli {
    /// Master seed. Every trial derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a point cloud (JSONL: header line, then one point per line).
    Sample(SampleArgs),
    /// Enumerate critical points of the k-NN distance (JSONL).
    CriticalPoints(CriticalArgs),
    /// Decide k-coverage at one radius (JSON verdict).
    Coverage(CoverageArgs),
    /// Threshold sweep over (n, w, mu) (CSV).
    Sweep(SweepArgs),
    /// Critical-window run with goodness-of-fit report (JSON) and marks (CSV).
    Window(WindowArgs),
    /// Expected Euler characteristic curve (CSV).
    Euler(EulerArgs),
    /// Monte Carlo estimate of the limit constant (JSON).
    Constants(ConstantsArgs),
    /// Per-instance agreement of the Morse and grid coverage decisions (CSV).
    OracleCompare(OracleArgs),
}

/// Where the point cloud comes from.
#[derive(Args, Debug)]
pub struct CloudSource {
    /// Dimension of the torus.
    #[arg(long)]
    pub d: usize,
    /// Flat comma-separated coordinates, `d` per point.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["input", "n"])]
    pub points: Option<String>,
    /// JSONL cloud as written by `sample`.
    #[arg(long, conflicts_with = "n")]
    pub input: Option<PathBuf>,
    /// Poisson intensity of a freshly sampled cloud.
    #[arg(long)]
    pub n: Option<f64>,
    /// Trial id of the sampled cloud.
    #[arg(long, default_value_t = 0)]
    pub trial_id: u64,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub d: usize,
    /// Poisson intensity.
    #[arg(long, required_unless_present = "count")]
    pub n: Option<f64>,
    /// Sample exactly this many points instead of a Poisson number.
    #[arg(long, conflicts_with = "n")]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub trial_id: u64,
}

#[derive(Args, Debug)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub cloud: CloudSource,
    #[arg(long)]
    pub k: usize,
    /// Lower end of the radius window (exclusive).
    #[arg(long, default_value_t = 0.0)]
    pub r_min: f64,
    /// Upper end of the radius window (inclusive).
    #[arg(long, default_value_t = 0.25)]
    pub r_max: f64,
    /// Keep only critical points of this index.
    #[arg(long)]
    pub mu: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CoverageMethod {
    Morse,
    Grid,
    Both,
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub cloud: CloudSource,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub r: f64,
    #[arg(long, value_enum, default_value_t = CoverageMethod::Morse)]
    pub method: CoverageMethod,
    /// Grid spacing (default r/16).
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// JSON sweep configuration; replaces the flags below.
    #[arg(long, conflicts_with_all = ["d", "k", "mu", "n", "w", "trials"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub d: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    pub k: Option<usize>,
    /// Target indices, comma-separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "config")]
    pub mu: Vec<usize>,
    /// Intensities, comma-separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "config")]
    pub n: Vec<f64>,
    /// Offsets w, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "config")]
    pub w: Vec<f64>,
    #[arg(long, required_unless_present = "config")]
    pub trials: Option<usize>,
    /// Also run the grid oracle on index-d cells.
    #[arg(long)]
    pub grid_oracle: bool,
    /// Also record Euler characteristics.
    #[arg(long)]
    pub euler: bool,
    /// Write every trial record as JSONL to this file.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct WindowArgs {
    #[arg(long)]
    pub n: f64,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: f64,
    #[arg(long)]
    pub trials: usize,
    /// Marked points CSV (default: next to --out, with `.marks.csv`).
    #[arg(long)]
    pub marks: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EulerArgs {
    #[arg(long)]
    pub n: f64,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    /// Values of Λ = n ω_d r^d, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambdas: Vec<f64>,
    #[arg(long)]
    pub trials: usize,
    /// Polynomial degree of the fit included in JSON output.
    #[arg(long)]
    pub fit_degree: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Counting,
    AsPrinted,
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Counting)]
    pub normalization: NormalizationArg,
    /// Apply a random rotation to every sample.
    #[arg(long)]
    pub rotate: bool,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub n: f64,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    /// Window offsets λ0, comma-separated; instances cycle through them.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub lambda0: Vec<f64>,
    #[arg(long)]
    pub trials: usize,
    /// Grid spacing is r divided by this.
    #[arg(long, default_value_t = 16.0)]
    pub h_divisor: f64,
    /// Resolve marginal grid verdicts by local refinement.
    #[arg(long)]
    pub refine: bool,
}
