use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use symstat::{GroupSpec, Metric, Mode, RoundingParams, SolverOptions};

mod bench;
mod commands;

#[derive(Parser, Debug)]
#[command(name = "symstat", version, about = "Mean and variance of rotations and projection directions under molecular symmetry")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean and variance of a data file.
    Meanvar(MeanvarArgs),
    /// Simulation benchmarks against brute-force optima.
    Bench(BenchArgs),
    /// K-means on S² modulo the symmetry group.
    Cluster(ClusterArgs),
    /// Write a labeled synthetic direction set.
    Gen(GenArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct RoundingArgs {
    /// Number of partial solutions kept by the greedy rounding.
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// Cumulative probability threshold of the greedy rounding.
    #[arg(long, default_value_t = 0.99)]
    c: f64,
    /// SDP stopping tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// SDP iteration cap.
    #[arg(long, default_value_t = 20000)]
    max_iters: usize,
}

impl RoundingArgs {
    fn rounding(&self) -> Result<RoundingParams> {
        Ok(RoundingParams::new(self.m, self.c)?)
    }

    fn solver(&self) -> Result<SolverOptions> {
        if !(self.tol > 0.0) {
            bail!("--tol must be positive");
        }
        if self.max_iters == 0 {
            bail!("--max-iters must be positive");
        }
        Ok(SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            ..Default::default()
        })
    }
}

#[derive(Args, Debug)]
struct MeanvarArgs {
    #[arg(long)]
    group: GroupSpec,
    #[arg(long, default_value = "arith")]
    metric: Metric,
    #[arg(long, default_value = "rotation")]
    mode: Mode,
    /// Quaternions `w x y z` (rotation) or directions `x y z` (projection).
    #[arg(long)]
    input: PathBuf,
    /// JSON result file.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    tuning: RoundingArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// 1 approximation, 2 rounding accuracy, 3 eigenvector rounding,
    /// 4 hyperparameter sweep, 5 timing.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=5))]
    table: u8,
    /// Comma-separated groups.
    #[arg(long, value_delimiter = ',')]
    group: Vec<GroupSpec>,
    #[arg(long, value_delimiter = ',')]
    metric: Vec<Metric>,
    #[arg(long, value_delimiter = ',')]
    mode: Vec<Mode>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points per instance; defaults to the brute-force size, or 10 for timing.
    #[arg(long)]
    n: Option<usize>,
    /// Sweep points as `m:c`, comma-separated (table 4).
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<String>,
    /// JSON summary file.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    tuning: RoundingArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Baseline {
    Quotient,
    Fundamental,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum InitArg {
    Random,
    PlusPlus,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Directions `x y z [label]`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "C3")]
    group: GroupSpec,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value = "arith")]
    metric: Metric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Baseline::Quotient)]
    baseline: Baseline,
    /// Members per cluster used for each mean.
    #[arg(long, default_value_t = 10)]
    subsample: usize,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    /// Initial centers; defaults to k-means++ for the quotient method and
    /// uniform for the baseline.
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Independent runs; defaults to 5 for the quotient method and 1 for the
    /// baseline.
    #[arg(long)]
    restarts: Option<usize>,
    /// JSON result file.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Point coordinates with cluster colors for plotting.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[command(flatten)]
    tuning: RoundingArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value = "C3")]
    group: GroupSpec,
    /// Output file; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Move each point by a random group element drawn with this seed.
    #[arg(long)]
    scramble: Option<u64>,
    #[arg(long, default_value_t = 0.2)]
    radius: f64,
    #[arg(long, default_value_t = 100)]
    count: usize,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot configure worker pool")?;
    }
    match cli.command {
        Command::Meanvar(a) => commands::meanvar(&a),
        Command::Bench(a) => bench::run(&a),
        Command::Cluster(a) => commands::cluster(&a),
        Command::Gen(a) => commands::gen(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
