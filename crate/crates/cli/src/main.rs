//! `bippr` command-line driver.
//!
//! Exit codes: 0 ok, 1 I/O or file errors, 2 bad arguments or unknown
//! labels, 3 size guard exceeded.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bippr", version, about = "Bidirectional personalized PageRank and diffusion estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the PPR of one (source, target) pair; prints JSON.
    Estimate(EstimateArgs),
    /// Dump an exact PPR (or length-`ell` transition) vector as node,value CSV.
    Exact(ExactArgs),
    /// Run estimators repeatedly against the exact oracle; prints per-trial CSV.
    Bench(BenchArgs),
    /// Estimate a PageRank or heat-kernel diffusion for one pair; prints JSON.
    Diffusion(DiffusionArgs),
    /// Check the loaded graph's structural invariants; prints JSON.
    Validate(GraphArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Edge-list file: `u v [w]` per line, `#` comments.
    #[arg(long)]
    pub graph: PathBuf,
    /// Read the optional third column as an edge weight.
    #[arg(long)]
    pub weighted: bool,
    /// Worker threads for walk sampling (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Auto,
    Value(f64),
}

fn parse_delta(s: &str) -> Result<Delta, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Delta::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Delta::Value(v)),
        _ => Err(format!("expected a positive number or `auto`, got {s:?}")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct AccuracyArgs {
    /// Teleport probability.
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Minimum probability of interest, or `auto` for d_t / m.
    #[arg(long, default_value = "auto", value_parser = parse_delta)]
    pub delta: Delta,
    /// Relative error.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Failure probability.
    #[arg(long = "pfail", default_value_t = 0.01)]
    pub p_fail: f64,
    /// Override the Chernoff constant 3 ln(2 / p_fail).
    #[arg(long)]
    pub c: Option<f64>,
    /// Override the balanced maximum residual.
    #[arg(long = "rmax")]
    pub r_max: Option<f64>,
    #[arg(long, env = "BIPPR_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Bippr,
    Mc,
    Push,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Pagerank,
    HeatKernel,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub accuracy: AccuracyArgs,
    #[arg(long)]
    pub source: String,
    #[arg(long)]
    pub target: String,
    /// `bippr` or `mc`.
    #[arg(long, value_enum, default_value_t = Estimator::Bippr)]
    pub estimator: Estimator,
    /// Walk count override (Monte Carlo defaults to c / (eps^2 delta)).
    #[arg(long)]
    pub walks: Option<u64>,
    /// Include the forward-push estimate and residual vectors in the output.
    #[arg(long)]
    pub trace_push: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub source: String,
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Dump the length-`ell` transition probabilities instead of PPR.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Power-iteration tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Largest graph accepted (default 100000 for PPR, 10000 with --ell).
    #[arg(long)]
    pub max_nodes: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub accuracy: AccuracyArgs,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = Estimator::All)]
    pub estimator: Estimator,
    /// Fixed source; with --target, benchmarks a single pair.
    #[arg(long, requires = "target")]
    pub source: Option<String>,
    #[arg(long, requires = "source")]
    pub target: Option<String>,
    /// Number of seeded random pairs when no pair is given.
    #[arg(long, default_value_t = 3)]
    pub pairs: usize,
    /// Largest graph for which the exact oracle is run.
    #[arg(long, default_value_t = 100_000)]
    pub max_nodes: usize,
    /// Append a wall-clock column (makes output nondeterministic).
    #[arg(long)]
    pub wall_time: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct DiffusionArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub accuracy: AccuracyArgs,
    #[arg(long)]
    pub source: String,
    #[arg(long)]
    pub target: String,
    #[arg(long, value_enum, default_value_t = Family::Pagerank)]
    pub family: Family,
    /// Heat-kernel time parameter.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Largest acceptable truncated tail mass.
    #[arg(long, default_value_t = 1e-6)]
    pub trunc_tol: f64,
    /// Walks per level (defaults to the bidirectional walk count).
    #[arg(long)]
    pub walks: Option<u64>,
    /// Draw a separate walk batch for every level.
    #[arg(long)]
    pub independent_levels: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Estimate(a) => a.graph.threads,
        Command::Exact(a) => a.graph.threads,
        Command::Bench(a) => a.graph.threads,
        Command::Diffusion(a) => a.graph.threads,
        Command::Validate(a) => a.threads,
    };
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Exact(a) => commands::exact(a),
        Command::Bench(a) => commands::bench(a),
        Command::Diffusion(a) => commands::diffusion(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
