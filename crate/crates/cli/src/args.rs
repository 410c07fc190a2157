//! Command-line surface. Every numeric option is optional on the command
//! line so that a configuration file can supply it.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::{Format, Unit};

#[derive(Debug, Parser)]
#[command(
    name = "emitter-qfi",
    version,
    about = "Spacing QFI and Cramér-Rao bounds for stretched emitter arrays"
)]
pub struct Cli {
    /// `key = value` file supplying defaults for any long option.
    #[arg(long, global = true, env = "QFI_ARRAY_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// QFI and QCRB from the clear-separation closed forms.
    Closed(ClosedArgs),
    /// Exact QFI of overlapping single-photon sources.
    Overlap(OverlapArgs),
    /// QFI/QCRB over a grid of spacings or array sizes.
    Sweep(SweepArgs),
    /// Run every self-consistency check.
    Check(CheckArgs),
    /// Evaluate one independent oracle.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    /// Source spacing d.
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<f64>,
    /// Gaussian standard deviation s of each source.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Homogeneous stretch factor.
    #[arg(long, allow_negative_numbers = true)]
    pub stretch: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Coherent amplitude |α|.
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// Fock truncation for coherent sources.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Thermal mean photon number, one value or one per source.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub mean_photons: Vec<f64>,
    /// Odd-source weight p of the odd/even entangled state.
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Number of repetitions ν in the QCRB.
    #[arg(long)]
    pub repetitions: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Length unit label (does not rescale values).
    #[arg(long, value_enum)]
    pub unit: Option<Unit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClosedModel {
    Spe,
    Coherent,
    Thermal,
    EntangledOddEven,
    Optimal,
}

impl std::str::FromStr for ClosedModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepModel {
    Spe,
    Coherent,
    Thermal,
    EntangledOddEven,
    Optimal,
    Overlap,
    /// Every closed-form model.
    All,
}

impl std::str::FromStr for SweepModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Enumerate,
    Permanent,
}

impl std::str::FromStr for EngineArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    /// Spacing d.
    D,
    /// Number of sources N.
    N,
}

impl std::str::FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    /// Fixed reduction order: byte-identical output across runs and threads.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClosedArgs {
    #[arg(long, value_enum)]
    pub model: Option<ClosedModel>,
    /// Number of sources N.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OverlapArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub variable: Option<SweepVariable>,
    /// Lower grid bound (d, or N for `--variable n`).
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    /// Upper grid bound.
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,
    /// Number of grid points of a spacing sweep.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Read `--min`/`--max` of a spacing sweep in units of s.
    #[arg(long)]
    pub in_sigma: bool,
    /// Array sizes of a spacing sweep.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Default: overlap for spacing sweeps, all for size sweeps.
    #[arg(long, value_enum)]
    pub model: Option<SweepModel>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    /// Output file (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Largest array size used by the enumeration-based checks.
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Print the JSON report instead of the text summary.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Invert every outcome to exercise the failure path.
    #[arg(long)]
    pub self_test_negate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    /// Fidelity finite-difference QFI next to the exact engine.
    Fidelity,
    /// Normalised state overlap ⟨Ψ(d)|Ψ(d2)⟩.
    StateOverlap,
    /// Truncated Poisson second moment.
    Poisson,
    /// Truncated thermal second moment.
    Thermal,
    /// Generator variance of the NOON-like state.
    Noon,
    /// Photon-counting CFI by quadrature.
    Cfi,
    /// Moments of the optimal counting estimator.
    Estimator,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(value_enum)]
    pub kind: OracleKind,
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Second spacing for `state-overlap`.
    #[arg(long, allow_negative_numbers = true)]
    pub d2: Option<f64>,
    /// Finite-difference steps for `fidelity` (default 1e-3, 5e-4, 2.5e-4 times s).
    #[arg(long, value_delimiter = ',')]
    pub steps: Vec<f64>,
    #[command(flatten)]
    pub source: SourceArgs,
}
