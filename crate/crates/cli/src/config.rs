//! Command-line surface: eight subcommands, flags merged over an optional
//! JSON configuration file (flags win).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "pjn",
    version,
    about = "Parabolic oscillation functionals, desk-scale PBMO/PJN norms, \
             stopping-time decomposition and chaining on piecewise-constant fields"
)]
pub struct Cli {
    /// Optional JSON configuration file; explicit flags win over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a field file from a preset.
    Gen(GenArgs),
    /// Minimal oscillation constant of one rectangle.
    Osc(OscArgs),
    /// Desk PJN norm over a candidate ladder.
    Norm(NormArgs),
    /// Sharp maximal function sampled at cell centers, written as a field.
    Sharp(SharpArgs),
    /// Stopping-time decomposition tree with its structural invariants.
    Cz(CzArgs),
    /// Chains from sampled sources with geometric verdicts.
    Chain(ChainArgs),
    /// The explicit constant chain of the weak-type estimate.
    Constants(ConstantsArgs),
    /// Inequality verification; `--acceptance` runs the whole suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetKind {
    Constant,
    TimeStep,
    TimeRamp,
    RandomCells,
    LogSpike,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub preset: PresetKind,
    /// Output field file.
    #[arg(long)]
    pub out: PathBuf,
    /// Spatial dimension.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Parabolic exponent stored in the header.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Cells per axis, comma separated, time last.
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 64])]
    pub res: Vec<usize>,
    /// Domain lower corner, comma separated, time last.
    #[arg(long, value_delimiter = ',', default_values_t = [-1.0, -1.0])]
    pub lo: Vec<f64>,
    /// Domain upper corner, comma separated, time last.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0])]
    pub hi: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// constant: the value.
    #[arg(long, default_value_t = 0.0)]
    pub value: f64,
    /// time_step: jump size.
    #[arg(long, default_value_t = 4.0)]
    pub jump: f64,
    /// time_step: jump time.
    #[arg(long, default_value_t = 0.0)]
    pub at: f64,
    /// time_step: nondecreasing instead of nonincreasing.
    #[arg(long, default_value_t = false)]
    pub nondecreasing: bool,
    /// time_ramp: slope.
    #[arg(long, default_value_t = -1.0)]
    pub slope: f64,
    /// log_spike: spike location, comma separated, time last.
    #[arg(long, value_delimiter = ',')]
    pub point: Option<Vec<f64>>,
    /// log_spike: clamp value.
    #[arg(long, default_value_t = 1e3)]
    pub cap: f64,
}

#[derive(Debug, Args)]
pub struct OscArgs {
    #[arg(long)]
    pub field: PathBuf,
    /// Rectangle center, spatial coordinates, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    pub center_x: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub center_t: f64,
    /// Rectangle edge length L.
    #[arg(long, default_value_t = 1.0)]
    pub edge: f64,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Also evaluate the oscillation at this constant.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Greedy,
    Exact,
    Auto,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub l_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SharpArgs {
    #[arg(long)]
    pub field: PathBuf,
    /// Output field of sharp-maximal values at cell centers.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CzArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Selection threshold.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_cells: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Number of random sources on top of corners and center.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Emit at most this many links per chain in the JSON.
    #[arg(long, default_value_t = 64)]
    pub emit_links: usize,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Desk norm, for the lambda_0 threshold.
    #[arg(long)]
    pub norm: Option<f64>,
    /// |R0+(alpha)|, for the lambda_0 threshold.
    #[arg(long)]
    pub measure: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyCheck {
    WeakType,
    GoodLambda,
    LagChange,
    LagEquivalence,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run the aggregated acceptance suite instead of field checks.
    #[arg(long, default_value_t = false)]
    pub acceptance: bool,
    #[arg(long, required_unless_present = "acceptance")]
    pub field: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = VerifyCheck::All)]
    pub check: VerifyCheck,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Second exponent of the lag-equivalence check.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
}

/// Values an optional JSON config file may provide; explicit flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub lambda: Option<f64>,
    pub scales: Option<usize>,
    pub stride: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub max_depth: Option<usize>,
    pub min_cells: Option<usize>,
}

/// `flag` wins, then the config file, then the built-in default.
pub fn pick<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
