//! `pclab`: generate planted-clique graphs, run chains, sweep experiment
//! grids and query the exact oracles.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when an enumeration
//! budget is exceeded or a hitting target is unreachable.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pclab::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "pclab",
    version,
    about = "Planted-clique Markov chain laboratory"
)]
pub struct Cli {
    /// Key-value (TOML) configuration file; required by `sweep`, optional
    /// defaults for `run`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for graph generation (or the sweep master seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Number of vertices.
    #[arg(long)]
    pub n: Option<usize>,
    /// Planted clique size.
    #[arg(long)]
    pub k: Option<usize>,
    /// Planted size as `floor(n^alpha)` (instead of --k).
    #[arg(long, conflicts_with = "k")]
    pub alpha: Option<f64>,
    /// Read the graph from a `pcgraph v1` file instead of generating it.
    #[arg(long, conflicts_with_all = ["n", "k", "alpha"])]
    pub graph: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Inverse temperature: a number, `ln_n`, `<c>*ln_n`.
    #[arg(long, default_value = "0")]
    pub beta: String,
    /// Explicit comma-separated h_0,...,h_n (identity when omitted).
    #[arg(long)]
    pub hamiltonian: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RunDynamics {
    Metropolis,
    Greedy,
    St,
    Bd1d,
    Bd2d,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum)]
    pub dynamics: Option<RunDynamics>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub hamiltonian: Option<String>,
    /// Step budget T.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Size target ceil((1+eps) log2 n).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Overlap target ceil(gamma log2 n).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Keep running after a target is hit.
    #[arg(long)]
    pub no_stop: bool,
    /// Comma-separated ladder (tempering and the 2D walk).
    #[arg(long)]
    pub ladder: Option<String>,
    /// Comma-separated log Z estimates, or `expected` / `exact`.
    #[arg(long)]
    pub ladder_log_z: Option<String>,
    /// Level-move probability a.
    #[arg(long)]
    pub a: Option<f64>,
    /// Ceiling parameter of the birth-death walks.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Starting size for the birth-death walks.
    #[arg(long)]
    pub start_size: Option<usize>,
    /// Chain seed (defaults to a value derived from --seed).
    #[arg(long)]
    pub chain_seed: Option<u64>,
    /// Record every k-th step (0 = summary only).
    #[arg(long)]
    pub thin: Option<u64>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum BottleneckKind {
    /// log Z_{*,r} - log Z_{*,<=r}.
    Intersection {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = pclab::exact::DEFAULT_BUDGET)]
        budget: usize,
    },
    /// log Z(B) - log Z(A) for the gateway bottleneck.
    LargeClique {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = pclab::exact::DEFAULT_STATE_LIMIT)]
        budget: usize,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Generate a planted-clique graph.
    Generate {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Run one chain and write its trajectory.
    Run(Box<RunArgs>),
    /// Run an experiment grid from --config.
    Sweep {
        /// Worker threads (0 = all cores; PCLAB_THREADS overrides).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Exact census W[q][r] as CSV.
    Census {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = pclab::exact::DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Exact bottleneck ratios.
    Bottleneck {
        #[command(subcommand)]
        kind: BottleneckKind,
    },
    /// q-gateway membership of every clique.
    Gateways {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = pclab::exact::DEFAULT_STATE_LIMIT)]
        budget: usize,
    },
    /// Exact expected hitting time from the empty clique.
    HittingTime {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Target: cliques of at least this size.
        #[arg(long)]
        target_size: Option<usize>,
        /// Target: cliques with at least this planted overlap.
        #[arg(long)]
        target_overlap: Option<usize>,
        #[arg(long, default_value_t = pclab::exact::DEFAULT_STATE_LIMIT)]
        budget: usize,
    },
    /// Run the bundled invariant suites.
    Verify {
        #[arg(long, default_value = "small")]
        fixtures: String,
    },
    /// Evaluate first-moment formulas.
    Predict {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Emit the E[W_{q,r}] table for (n, k) instead.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long, default_value_t = 12)]
        q_max: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } | Error::Unreachable => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
