use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "persist-lab", version, about = "Thresholds and simulations for the two-state persistence model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral data, t*, T_c and the delta_c lower bound for one rate triple (JSON).
    Analyze(AnalyzeArgs),
    /// T_c over a log-spaced (a, b) grid at fixed lambda.
    TcGrid(TcGridArgs),
    /// T_c as a function of lambda at fixed (a, b).
    TcLambda(TcLambdaArgs),
    /// m'(delta) with its envelope over a log-spaced delta range.
    Mprime(MprimeArgs),
    /// The critical killing intensity delta_c.
    DeltaC(DeltaCArgs),
    /// Monte Carlo survival under periodic or Poisson killing.
    Survival(SurvivalArgs),
    /// Checks the thinning coupling between two killing intensities.
    CouplingCheck(CouplingArgs),
    /// Renders a CSV produced by this tool as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[value(name = "svg+csv")]
    #[serde(rename = "svg+csv")]
    SvgCsv,
}

/// Flags shared by every computing command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Master seed; replicate i uses stream i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Root-finding tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Initial Gauss nodes per panel for m'.
    #[arg(long, default_value_t = 16)]
    pub quad_nodes: usize,
    /// Worker threads; PERSIST_LAB_THREADS takes precedence.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also solve for delta_c (many quadratures).
    #[arg(long)]
    pub delta_c: bool,
}

#[derive(Debug, Args)]
pub struct TcGridArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1e-6)]
    pub a_min: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub a_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub b_min: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub b_max: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct TcLambdaArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 40)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct MprimeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.1)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 50.0)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct DeltaCArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SurvivalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Deterministic killing period T.
    #[arg(long, conflicts_with_all = ["tc_factor", "delta"])]
    pub period: Option<f64>,
    /// Deterministic killing with period equal to this multiple of T_c.
    #[arg(long, conflicts_with = "delta")]
    pub tc_factor: Option<f64>,
    /// Poisson killing intensity.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    /// Censoring depth: alive means at least one cell after this many killings.
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Population at which a replicate is declared alive.
    #[arg(long, default_value_t = 10_000)]
    pub cap: u64,
    /// Per-replicate outcome CSV.
    #[arg(long)]
    pub replicates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CouplingArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub delta_high: f64,
    #[arg(long, default_value_t = 20.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    /// Branches expanded per process before it is declared alive.
    #[arg(long, default_value_t = 10_000)]
    pub node_budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Line,
    Heatmap,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// CSV written by tc-grid, tc-lambda or mprime.
    pub csv: PathBuf,
    /// Inferred from the CSV columns when absent.
    #[arg(long, value_enum)]
    pub kind: Option<PlotKind>,
    /// SVG path; defaults to the CSV path with an .svg extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
