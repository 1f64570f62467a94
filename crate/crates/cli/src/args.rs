use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "locpoly",
    version,
    about = "Local polynomial estimation of derivatives of vector-valued functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a local polynomial at the origin and apply an operator.
    Fit(FitArgs),
    /// Split the data, fit on every part and return the median-ball center.
    Robust(RobustArgs),
    /// Run a convergence experiment; writes CSV tables, an SVG plot and a rate fit.
    Convergence(ConvergenceArgs),
    /// Generate a synthetic dataset and its ground-truth sidecar.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Dataset CSV with header x1..xd,y1..yD.
    pub data: PathBuf,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Smoothness order; the local polynomial has degree k-1.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: Option<u32>,
    /// `identity`, `d<j>`, `d<j>d<l>...` (1-based axes) or a JSON term list.
    #[arg(long)]
    pub operator: Option<String>,
    /// Bandwidth constant b in eps_n = b * n^(-1/(2k+d)).
    #[arg(long, value_parser = positive)]
    pub bandwidth_constant: Option<f64>,
    /// Comma-separated target point; the data are translated so it sits at the origin.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub center: Option<Vec<f64>>,
    /// Relative singular-value threshold for the rank check.
    #[arg(long, value_parser = positive)]
    pub rank_rtol: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub est: EstimatorArgs,
}

#[derive(Debug, Args)]
pub struct RobustArgs {
    #[command(flatten)]
    pub est: EstimatorArgs,
    /// Target failure probability epsilon, in (0, 1).
    #[arg(long, value_parser = open_unit)]
    pub failure_prob: Option<f64>,
    /// Per-split failure probability epsilon_0, in (0, 0.5).
    #[arg(long, value_parser = open_half)]
    pub eps0: Option<f64>,
    /// Fixed concentration radius rho (balls of radius 2 rho); adaptive if omitted.
    #[arg(long, value_parser = positive)]
    pub radius: Option<f64>,
    /// Seed of the random split.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AggregateArg {
    Mean,
    Median,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    /// Experiment spec JSON.
    pub spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep one random function per D instead of redrawing it every trial.
    #[arg(long)]
    pub fix_function: bool,
    #[arg(long, value_enum)]
    pub aggregate: Option<AggregateArg>,
    #[arg(long, default_value_t = 720, value_parser = clap::value_parser!(u32).range(100..))]
    pub width: u32,
    #[arg(long, default_value_t = 480, value_parser = clap::value_parser!(u32).range(100..))]
    pub height: u32,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator spec JSON.
    pub spec: PathBuf,
    /// Output CSV; the sidecar goes next to it as <stem>.truth.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not finite"))
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

pub fn open_unit(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie strictly between 0 and 1, got {v}"))
    }
}

pub fn open_half(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err(format!("must lie strictly between 0 and 0.5, got {v}"))
    }
}
