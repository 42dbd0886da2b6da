mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};

/// Divergence geometry of quantum states: meshes, Holevo capacity and Voronoi bisectors.
#[derive(Debug, Parser)]
#[command(name = "qgeo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the pure-state mesh and write it as a point-set JSON.
    Mesh(MeshArgs),
    /// Estimate the Holevo capacity of a channel as a divergence radius.
    Capacity(CapacityArgs),
    /// Audit bisector sign agreement between metrics.
    Coincide(CoincideArgs),
    /// Sample bisector fields on the section and write CSV (and optionally SVG).
    Bisector(BisectorArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Linear,
    Quadratic,
}

impl From<RuleArg> for qgeo::mesh::MeshRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Linear => qgeo::mesh::MeshRule::Linear,
            RuleArg::Quadratic => qgeo::mesh::MeshRule::Quadratic,
        }
    }
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "quadratic")]
    pub rule: RuleArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    Gamma5,
    Identity,
    Depolarizing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsolverArg {
    Reduced,
    Penalty,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// Channel JSON: {"dim": d, "kraus": [matrix, ...], "complete_last": bool}.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub channel: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Level count for the identity and depolarizing builtins.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "quadratic")]
    pub rule: RuleArg,
    /// Shuffle seed for the enclosing-ball solver; QGEO_SEED overrides it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "reduced")]
    pub subsolver: SubsolverArg,
    /// Print the headline value in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Expect {
    Coincide,
    Differ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleKind {
    Pure,
    Faithful,
}

#[derive(Debug, Args)]
pub struct CoincideArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Number of random sites; every pair is audited.
    #[arg(long, default_value_t = 2)]
    pub sites: usize,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Comma-separated metric names.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "pure")]
    pub sample_kind: SampleKind,
    /// Work on the three-parameter section (d >= 3).
    #[arg(long)]
    pub section: bool,
    /// Use the eight-site configuration instead of random section sites.
    #[arg(long, requires = "section")]
    pub example3: bool,
    /// Sample the section on an R x R grid instead of at random.
    #[arg(long, requires = "section")]
    pub grid: Option<usize>,
    /// Diagonal rescaling of the Euclidean section metric: a number or "auto" (d / sqrt 2).
    #[arg(long, default_value = "1")]
    pub scale: String,
    #[arg(long, default_value_t = 1e-10)]
    pub floor: f64,
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BisectorArgs {
    /// Comma-separated metric names (state metrics or divergence-section / euclid-section).
    #[arg(long, value_delimiter = ',', required = true)]
    pub metric: Vec<String>,
    /// Sites JSON: {"dim": d, "sites": [{"xi1": .., "xid": .., "xid1": ..}, ...]} or a point set.
    #[arg(long, conflicts_with = "example3", required_unless_present = "example3")]
    pub sites: Option<PathBuf>,
    /// Use the eight-site configuration in this dimension.
    #[arg(long)]
    pub example3: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Sample a copy of the pure ellipsoid shrunk by this factor.
    #[arg(long, default_value_t = 1.0)]
    pub shrink: f64,
    /// Diagonal rescaling for euclid-section: a number or "auto".
    #[arg(long, default_value = "1")]
    pub scale: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// `QGEO_SEED` wins over the command-line seed.
pub fn effective_seed(cli_seed: u64) -> CliResult<u64> {
    match std::env::var("QGEO_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Args(format!("QGEO_SEED is not an unsigned integer: {v:?}"))),
        Err(_) => Ok(cli_seed),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Mesh(a) => commands::mesh(a),
        Command::Capacity(a) => commands::capacity(a),
        Command::Coincide(a) => commands::coincide(a),
        Command::Bisector(a) => commands::bisector(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
