use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "whid", version, about = "Wiener-Hammerstein identification by pole/zero allocation")]
pub struct Cli {
    /// Maximum number of worker threads (default: one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Simulate one or more periods of a Wiener-Hammerstein system driven by
    /// periodic Gaussian noise.
    Simulate(SimulateArgs),
    /// Design a Chebyshev low-pass filter.
    DesignFilter(DesignArgs),
    /// Identify a model from input/output data.
    Identify(IdentifyArgs),
    /// Run the Monte Carlo comparison of brute force and GA.
    Benchmark(BenchmarkArgs),
    /// Re-run the command recorded in a manifest.json.
    Replay(ReplayArgs),
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Model JSON ({"front": tf, "nonlinearity": ..., "back": tf}).
    #[arg(long, conflicts_with = "order", required_unless_present = "order")]
    pub model: Option<PathBuf>,
    /// Draw a random system of this block order from the standard recipe
    /// instead of reading a model.
    #[arg(long)]
    pub order: Option<usize>,
    /// Period length in samples.
    #[arg(short = 'n', long, default_value_t = 4096)]
    pub samples: usize,
    /// Standard deviation of the excitation.
    #[arg(long, default_value_t = 1.0)]
    pub std: f64,
    /// Number of independent excitation realizations.
    #[arg(long, default_value_t = 1)]
    pub realizations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Cheby1,
    Cheby2,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct DesignArgs {
    #[arg(long, value_enum)]
    pub kind: FilterKind,
    #[arg(long)]
    pub order: usize,
    /// Passband ripple (type 1) or stopband attenuation (type 2) in dB.
    #[arg(long)]
    pub level: f64,
    /// Cutoff in cycles per sample, in (0, 0.5). Type 2 uses it as the
    /// stopband edge.
    #[arg(long)]
    pub cutoff: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Ga,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionArg {
    Sus,
    Tournament,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct IdentifyArgs {
    /// Input signal CSV. Repeat to pass several realizations; the first pair
    /// drives the allocation search.
    #[arg(long = "input", short = 'u', required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output signal CSV, one per input.
    #[arg(long = "output", short = 'y', required = true)]
    pub outputs: Vec<PathBuf>,
    /// Poles, zeros and gain of the overall dynamics (zpk or num/den JSON).
    #[arg(long, conflicts_with = "fit_bla", required_unless_present = "fit_bla")]
    pub zpk: Option<PathBuf>,
    /// Estimate the dynamics from the data as a rational model with these
    /// numerator and denominator orders, e.g. `--fit-bla 10,10`.
    #[arg(long, value_delimiter = ',', num_args = 1, value_name = "NUM,DEN")]
    pub fit_bla: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = Method::Ga)]
    pub method: Method,
    /// Polynomial degrees of the static nonlinearity.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub degrees: Vec<u32>,
    #[arg(long, default_value_t = 200)]
    pub pop_size: usize,
    #[arg(long, default_value_t = 50)]
    pub generations: usize,
    #[arg(long, default_value_t = 5)]
    pub stall_limit: usize,
    /// Cost tolerance for the stall and early-stop tests.
    #[arg(long, default_value_t = 1e-20)]
    pub tolfun: f64,
    #[arg(long, default_value_t = 2)]
    pub elite: usize,
    #[arg(long, default_value_t = 0.8)]
    pub crossover_fraction: f64,
    /// Per-bit flip probability (default 1/number of groups).
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long, value_enum, default_value_t = SelectionArg::Sus)]
    pub selection: SelectionArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Desk,
    Paper,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct BenchmarkArgs {
    /// Monte Carlo config JSON. Missing fields take desk-scale defaults.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write report.md and print it.
    #[arg(long)]
    pub markdown: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
