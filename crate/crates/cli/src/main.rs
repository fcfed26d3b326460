//! `stable-regen`: reproducible experiments for multiple-stable processes.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, ValueEnum};
use stable_regen::experiments::{run, ExperimentConfig, Format, Subcommand, THREADS_ENV};
use stable_regen::TailIndex;

#[derive(Parser, Debug)]
#[command(name = "stable-regen", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand, Debug)]
enum Command {
    /// Regime, indices and limit constants.
    Constants(Common),
    /// One path of the series representation.
    SimulatePath(Common),
    /// CDF grid of the limit law of the normalized maximum.
    MaxLaw(Common),
    /// Medians of the maximum over a dyadic grid of n.
    ScalingSweep(Common),
    /// Blocks estimate of the extremal index.
    ExtremalIndex(Common),
    /// Conditional sign/support law at exceedances against the tail process.
    TailProcess(Common),
    /// Tuple counts against their asymptotics.
    Counts(Common),
    /// Truncation diagnostic and block-hit probability.
    Diagnostics(Common),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    /// Stability index in (0,2).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Tail index in (0,1), decimal or exact ratio such as 3/4.
    #[arg(long)]
    beta: TailIndex,
    /// Multiplicity.
    #[arg(long)]
    p: u32,
    #[arg(long)]
    n: Option<u64>,
    /// Comma-separated grid of n.
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Block length d_n (defaults per regime).
    #[arg(long)]
    block_length: Option<u64>,
    /// Series truncation L (Z sampler: L_cap).
    #[arg(long = "L", alias = "truncation")]
    truncation: Option<usize>,
    /// Product cap factor K of the truncated index set.
    #[arg(long = "K", alias = "k-cap")]
    k_cap: Option<f64>,
    /// Threshold quantile of |X|.
    #[arg(long, default_value_t = 0.995)]
    x_quantile: f64,
    /// Tail-process horizon.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Monte Carlo draws for limit laws and block-hit trials.
    #[arg(long, default_value_t = 100_000)]
    mc_samples: usize,
    /// Truncation of the renewal mass series for the terminating probability.
    #[arg(long, default_value_t = 100_000)]
    q_truncation: usize,
    /// Emit one row per k in simulate-path.
    #[arg(long)]
    export_path: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    /// Worker threads (0: all cores).
    #[arg(long, env = THREADS_ENV, default_value_t = 0)]
    threads: usize,
}

fn config(cmd: Command) -> ExperimentConfig {
    let (sub, c) = match cmd {
        Command::Constants(c) => (Subcommand::Constants, c),
        Command::SimulatePath(c) => (Subcommand::SimulatePath, c),
        Command::MaxLaw(c) => (Subcommand::MaxLaw, c),
        Command::ScalingSweep(c) => (Subcommand::ScalingSweep, c),
        Command::ExtremalIndex(c) => (Subcommand::ExtremalIndex, c),
        Command::TailProcess(c) => (Subcommand::TailProcess, c),
        Command::Counts(c) => (Subcommand::Counts, c),
        Command::Diagnostics(c) => (Subcommand::Diagnostics, c),
    };
    let mut cfg = ExperimentConfig::new(sub, c.alpha, c.beta, c.p);
    cfg.n = c.n;
    cfg.n_grid = c.n_grid;
    cfg.replicates = c.replicates;
    cfg.seed = c.seed;
    cfg.block_length = c.block_length;
    cfg.truncation = c.truncation;
    cfg.k_cap = c.k_cap;
    cfg.x_quantile = c.x_quantile;
    cfg.m = c.m;
    cfg.mc_samples = c.mc_samples;
    cfg.q_truncation = c.q_truncation;
    cfg.export_path = c.export_path;
    cfg.output = c.output;
    cfg.format = match c.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
    };
    cfg.threads = c.threads;
    cfg
}

fn main() -> ExitCode {
    let cfg = config(Cli::parse().command);
    match run(&cfg) {
        Ok(outcome) => {
            if cfg.output.is_none() {
                let mut out = std::io::stdout().lock();
                if out.write_all(outcome.rendered.as_bytes()).is_err() {
                    return ExitCode::FAILURE;
                }
            }
            eprintln!("wall time: {:.3} s", outcome.wall_seconds);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
