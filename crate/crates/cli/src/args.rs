use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const REPORT_SCHEMA: u32 = 1;

fn version() -> &'static str {
    concat!(env!("CARGO_PKG_VERSION"), " (report schema 1)")
}

#[derive(Debug, Parser)]
#[command(name = "epictrl", version = version(), about = "Optimal seeding and resource allocation for SI campaigns on networks")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file of defaults; flags given on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output on standard error (repeat for more)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print node centrality scores as `node,score` CSV
    Centrality(CentralityCmd),
    /// Optimal controls for a fixed seed
    Solve(SolveCmd),
    /// Optimal seeds and controls together
    SolveJoint(JointCmd),
    /// Optimal controls under a fixed resource budget
    SolveBudget(BudgetCmd),
    /// Best static or two-stage baseline
    Heuristic(HeuristicCmd),
    /// Compare the ODE reach against stochastic simulation
    McValidate(McCmd),
    /// Run every strategy over a list of parameter values
    Sweep(SweepCmd),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    /// Edge list, one `u v` pair per line, `#` comments
    #[arg(long)]
    pub graph: PathBuf,
    /// Keep only the largest connected component
    #[arg(long)]
    pub giant: bool,
    /// Breadth-first sample of this many nodes
    #[arg(long)]
    pub bfs_target: Option<usize>,
    /// Start node (after relabelling) of the breadth-first sample
    #[arg(long, default_value_t = 0)]
    pub bfs_start: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MeasureArgs {
    #[arg(long, default_value = "degree")]
    pub measure: String,
    #[arg(long, default_value_t = 0.85)]
    pub pagerank_eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub pagerank_delta: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub pagerank_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// Number of centrality groups M
    #[arg(long, default_value_t = 1)]
    pub groups: usize,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Cost weight in g_m(u) = b p_m u^2
    #[arg(long, default_value_t = 25.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Grid steps K
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Uniform seed fraction i0 (the seed budget for solve-joint)
    #[arg(long, alias = "seed-budget", default_value_t = 0.01)]
    pub seed_frac: f64,
    /// Per-group seed fractions, comma separated; overrides --seed-frac
    #[arg(long, value_delimiter = ',')]
    pub seed_vector: Option<Vec<f64>>,
    /// Seed for breaking centrality ties when grouping
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub uth: f64,
    #[arg(long, default_value_t = 200)]
    pub maxiter: usize,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    /// Keep the damping weight fixed
    #[arg(long)]
    pub fixed_damping: bool,
    #[arg(long, default_value_t = 1e-4)]
    pub stationarity_tol: f64,
    #[arg(long, default_value_t = 1e3)]
    pub control_warn: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JointArgs {
    /// Outer iterations L
    #[arg(long, default_value_t = 50)]
    pub outer: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub fd_step: f64,
    #[arg(long, default_value_t = 20)]
    pub max_halvings: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BracketArgs {
    #[arg(long, default_value_t = 0.01)]
    pub mu_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mu_hi: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub mu_th: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub spend_rtol: f64,
    #[arg(long, default_value_t = 60)]
    pub max_widen: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 10.0)]
    pub u_max: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Evaluation cap S
    #[arg(long, default_value_t = 200)]
    pub max_evals: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Report file ending in .json, or a directory for all outputs
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CentralityCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// CSV destination; standard output when absent
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JointCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub joint: JointArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BudgetCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Total resource B
    #[arg(long)]
    pub budget: f64,
    #[command(flatten)]
    pub bracket: BracketArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Static,
    TwoStage,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeuristicCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Spend exactly this resource instead of searching the level
    #[arg(long)]
    pub budget: Option<f64>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    #[arg(long, default_value_t = 4)]
    pub substeps: usize,
    /// Histogram bins for the simulated reach
    #[arg(long)]
    pub bins: Option<usize>,
    /// Constant control level for every group instead of the optimal controls
    #[arg(long, conflicts_with = "controls")]
    pub level: Option<f64>,
    /// Controls CSV (`t,index,value`) as written by the solvers
    #[arg(long)]
    pub controls: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub joint: JointArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub bracket: BracketArgs,
    /// Parameter to vary: b, beta, M or B
    #[arg(long)]
    pub axis: String,
    /// Axis values, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Strategies to compare, comma separated (default: all registered)
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Inserts `key=value` lines from `--config FILE` right after the
/// subcommand, so anything on the real command line overrides them.
pub fn with_config_file(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text =
        std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value", i + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match value {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => {
                injected.push(format!("--{key}"));
                injected.push(value.to_string());
            }
        }
    }
    // the first non-flag after the program name is the subcommand
    let at = rest
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|p| p + 2)
        .ok_or("config file given without a subcommand")?;
    rest.splice(at..at, injected);
    Ok(rest)
}
