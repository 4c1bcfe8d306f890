use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "loctens", version, about = "Locally accurate tensor networks for 1D spin chains, checked against dense oracles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Directory for `<command>.json` and `<command>.csv`. Without it the
    /// summary goes to stdout only.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Largest chain the dense oracle may build.
    #[arg(long, default_value_t = 12)]
    pub dense_guard: usize,
    /// Seed for randomized fixtures.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Thermal MPO marginal errors against the exact Gibbs state.
    Thermal(ThermalArgs),
    /// Truncated cluster expansion against its 1-norm bound.
    Cluster(ClusterArgs),
    /// Depth-2 circuit Heisenberg error on a (w, t) grid.
    Evolve(EvolveArgs),
    /// Lieb-Robinson probe: restricted-evolution error on a (t, l) grid.
    Lr(LrArgs),
    /// Exhaustive tensor-vs-reference check of the conditional map.
    #[command(name = "condmap-verify")]
    CondmapVerify(CondmapArgs),
    /// Thermal autocorrelation of an extensive observable.
    Corr(CorrArgs),
    /// Product-state quench of a local observable.
    Quench(QuenchArgs),
    /// All bound formulas for a BoundInputs JSON file.
    Bounds(BoundsArgs),
    /// Oracle-equivalence suites.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Thermal(_) => "thermal",
            Command::Cluster(_) => "cluster",
            Command::Evolve(_) => "evolve",
            Command::Lr(_) => "lr",
            Command::CondmapVerify(_) => "condmap-verify",
            Command::Corr(_) => "corr",
            Command::Quench(_) => "quench",
            Command::Bounds(_) => "bounds",
            Command::Verify(_) => "verify",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Thermal(a) => &a.common,
            Command::Cluster(a) => &a.common,
            Command::Evolve(a) => &a.common,
            Command::Lr(a) => &a.common,
            Command::CondmapVerify(a) => &a.common,
            Command::Corr(a) => &a.common,
            Command::Quench(a) => &a.common,
            Command::Bounds(a) => &a.common,
            Command::Verify(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThermalArgs {
    /// Model JSON.
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long)]
    pub beta: f64,
    /// Block lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub l0: Vec<usize>,
    /// Width of the compared windows.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long)]
    pub beta: f64,
    /// Cluster size cut-off.
    #[arg(long = "L")]
    pub big_l: usize,
    /// Squaring parameter of the product construction.
    #[arg(long = "M", default_value_t = 2)]
    pub big_m: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvolveArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub t: Vec<f64>,
    /// Block widths, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub w: Vec<usize>,
    /// Letters of the evolved Pauli string.
    #[arg(long, default_value = "Z")]
    pub pauli: String,
    /// First site of the Pauli string; defaults to the chain middle.
    #[arg(long)]
    pub at: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LrArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    /// Window growths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub l: Vec<usize>,
    #[arg(long, default_value = "Z")]
    pub pauli: String,
    #[arg(long, default_value_t = 0)]
    pub at: usize,
    /// Letters of a probe string placed `l` sites to the right, for commutator norms.
    #[arg(long)]
    pub probe: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CondmapArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub l0: usize,
    /// Largest input support the map accepts.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub t: f64,
    /// Thermal block length; derived from `--eps` when absent.
    #[arg(long)]
    pub k_prime: Option<usize>,
    /// Target accuracy used to derive `k′` from the measured correlation length.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Lieb-Robinson velocity used to derive `k′`.
    #[arg(long, default_value_t = 2.0)]
    pub v_lr: f64,
    #[arg(long)]
    pub w: usize,
    /// Letters of each term of `A = (1/N) Σ_x`.
    #[arg(long, default_value = "Z")]
    pub obs: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuenchArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    /// `up`, `down`, `plus`, `minus` or one of `u d + -` per site.
    #[arg(long, default_value = "up")]
    pub state: String,
    #[arg(long, default_value = "Z")]
    pub pauli: String,
    #[arg(long)]
    pub at: Option<usize>,
    #[arg(long, value_delimiter = ',', num_args = 0.., required = true)]
    pub t: Vec<f64>,
    #[arg(long)]
    pub w: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    /// BoundInputs JSON.
    #[arg(long = "in")]
    #[serde(skip)]
    pub input: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// `all` or a comma-separated list of suites.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[command(flatten)]
    pub common: Common,
}
