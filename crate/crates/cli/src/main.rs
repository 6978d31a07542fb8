//! `cstrans`: fit, bootstrap and simulate partially linear additive
//! transformation models for current-status data.
//!
//! Exit codes: 0 success, 1 data or usage error, 2 numerical failure,
//! 3 no convergence (results are still written).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cstrans::isotonic::PavaWeighting;
use cstrans::simulate::{Method, ScenarioId};
use cstrans::LinkFamily;

#[derive(Parser, Debug)]
#[command(
    name = "cstrans",
    version,
    about = "Transformation models for current-status data"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model to a CSV with columns y, delta, z*, w*.
    Fit(FitArgs),
    /// Run a Monte-Carlo study and write the per-coefficient summary.
    Simulate(SimulateArgs),
    /// Bootstrap point-wise bands for eta and each phi_j.
    Bands(BandsArgs),
    /// Time a study with one worker against the parallel pool.
    Benchmark(BenchmarkArgs),
    /// Draw one dataset from a simulation scenario and write it as CSV.
    Generate(GenerateArgs),
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Link: ph, po or alpha=<x>.
    #[arg(long, default_value = "ph")]
    link: LinkFamily,
    /// Interior knots per spline (default ceil(n^(1/3))).
    #[arg(long)]
    knots: Option<usize>,
    /// Order of the difference penalty.
    #[arg(long, default_value_t = 2)]
    penalty_order: usize,
    /// Weights of the isotonic projection.
    #[arg(long, value_enum, default_value_t = Weighting::Variance)]
    pava_weighting: Weighting,
    /// Limit on smoothing-parameter updates.
    #[arg(long, default_value_t = 50)]
    max_outer: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Weighting {
    Variance,
    InverseVariance,
}

impl From<Weighting> for PavaWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::Variance => PavaWeighting::Variance,
            Weighting::InverseVariance => PavaWeighting::InverseVariance,
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Input CSV.
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// penalized or unpenalized-bic.
    #[arg(long, default_value = "penalized")]
    method: Method,
    /// Output directory.
    #[arg(long, default_value = "cstrans-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Study configuration as JSON; flags given alongside override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// S1, S2 or S3.
    #[arg(long)]
    scenario: Option<ScenarioId>,
    /// Link parameter used for generation and fitting.
    #[arg(long)]
    alpha: Option<f64>,
    /// Sample size per replicate.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// penalized or unpenalized-bic.
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    knots: Option<usize>,
    #[arg(long)]
    penalty_order: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "cstrans-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BandsArgs {
    /// Input CSV.
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// rows resamples observations; identity refits the data as given.
    #[arg(long, value_enum, default_value_t = ResampleArg::Rows)]
    resample: ResampleArg,
    /// Grid points per curve.
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value = "cstrans-out")]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ResampleArg {
    Rows,
    Identity,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long, default_value = "S1")]
    scenario: ScenarioId,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threads for the parallel run (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Also write benchmark.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value = "S1")]
    scenario: ScenarioId,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file.
    #[arg(long, default_value = "data.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Bands(args) => commands::bands(args),
        Command::Benchmark(args) => commands::benchmark(args),
        Command::Generate(args) => commands::generate(args),
    };
    match result {
        Ok(commands::Outcome::Done) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Unreliable(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
