//! Command-line harness for the Pareto precoding experiments.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};
use crate::output::Format;

#[derive(Parser)]
#[command(name = "pareto-precode", version, about = "Pareto-optimal MIMO precoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a channel instance and write it as JSON
    GenChannel(GenChannelArgs),
    /// Evaluate a zero-forcing or SLNR precoder with a power allocation
    Baseline(BaselineArgs),
    /// Refine parametric precoders for one or more user weight vectors
    Pareto(ParetoArgs),
    /// Sample the Pareto boundary with random user weights
    Surface(SurfaceArgs),
    /// Compare the parametric precoder against the baselines over noise levels and sizes
    Sweep(SweepArgs),
    /// Refinement iteration counts on random channels
    IterationStats(IterationStatsArgs),
    /// Optimality diagnostics for a given precoder
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BetaModeArg {
    UnitPerAntenna,
    UnitTotal,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["gaussian", "svd_decay", "toy"])))]
struct GenChannelArgs {
    /// I.i.d. complex Gaussian channel
    #[arg(long, num_args = 2, value_names = ["MTX", "MUE"])]
    gaussian: Option<Vec<usize>>,
    /// Channel with prescribed singular values (flat, inverse, inverse-square)
    #[arg(long, num_args = 3, value_names = ["LAW", "MTX", "MUE"])]
    svd_decay: Option<Vec<String>>,
    /// The 8x3 real toy channel
    #[arg(long)]
    toy: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise level relative to the channel: omega_k = chi ||H||_F / m_ue
    #[arg(long, conflicts_with = "omega")]
    chi: Option<f64>,
    /// Noise standard deviation, one value for all users or one per user
    #[arg(long, value_delimiter = ',')]
    omega: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "unit-per-antenna")]
    beta_mode: BetaModeArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Zf,
    Slnr,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    /// Exit tolerance of the power refinement
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-12)]
    mu_min: f64,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// uniform | waterfill | global | kappa=K1,K2,... (column power shares)
    #[arg(long, default_value = "uniform")]
    alloc: String,
    /// Frobenius budget for water-filling (defaults to sum of beta)
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    save_precoder: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ParetoArgs {
    #[arg(long)]
    channel: PathBuf,
    /// uniform | L1,L2,... | random N
    #[arg(long, num_args = 1..=2, default_value = "uniform")]
    lambda: Vec<String>,
    /// Number of mu updates: 0, 1, ... or `converge`
    #[arg(long, default_value = "converge")]
    iters: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    refine: RefineArgs,
    /// Write the precoder as JSON (single weight vector only)
    #[arg(long)]
    save_precoder: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SurfaceArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    refine: RefineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Noise levels, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    chi_list: Vec<f64>,
    /// Sizes as MTXxMUE, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    sizes_list: Vec<String>,
    #[arg(long, default_value = "inverse-square")]
    law: String,
    /// Number of channel seeds per cell
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First channel seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "unit-total")]
    beta_mode: BetaModeArg,
    #[command(flatten)]
    refine: RefineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct IterationStatsArgs {
    /// Sizes as MTXxMUE, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    precoder: PathBuf,
    /// Relative SINR gain every user must reach for an improvement to count
    #[arg(long, default_value_t = 1e-4)]
    upsilon: f64,
    /// Rows below beta (1 - tol) count as having spare power
    #[arg(long, default_value_t = 1e-6)]
    slack_tol: f64,
    /// Largest number of column subsets examined for the Kruskal rank
    #[arg(long, default_value_t = 1_000_000)]
    kruskal_limit: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("PARETO_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("PARETO_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::GenChannel(a) => commands::gen_channel(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Pareto(a) => commands::pareto(a),
        Command::Surface(a) => commands::surface(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::IterationStats(a) => commands::iteration_stats(a),
        Command::Verify(a) => commands::verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
