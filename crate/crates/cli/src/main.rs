//! `mg1`: generate benchmark models, solve for `G`, sweep the embedding degree
//! and report rate diagnostics.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "mg1", version, about = "Fixed-point solvers for M/G/1-type matrix equations")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "MG1_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a benchmark model file.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve for G and write the residual history.
    Solve(SolveArgs),
    /// Run optimal embeddings over a range of q+1.
    Sweep(SweepArgs),
    /// Report splitting rates and root diagnostics.
    Analyze(AnalyzeArgs),
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// Circulant family with prescribed drift.
    Synthetic(SyntheticArgs),
    /// PH/PH/1 queue with Erlang service.
    Phph(PhphArgs),
}

#[derive(Args, Debug)]
struct SyntheticArgs {
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 50)]
    d: usize,
    #[arg(long, default_value_t = -0.1, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, default_value_t = 0.6)]
    s1: f64,
    #[arg(long, default_value_t = 0.9995)]
    s2: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output model file (default: <out-dir>/synthetic.mg1).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PhphArgs {
    #[arg(long, default_value_t = 10)]
    n1: usize,
    #[arg(long, default_value_t = 10)]
    n2: usize,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.5)]
    c: f64,
    #[arg(long, default_value_t = 0.85)]
    rho: f64,
    /// Drop the tail once its infinity norm is at most this.
    #[arg(long, default_value_t = 1e-16)]
    trunc_tol: f64,
    /// Keep exactly this degree instead.
    #[arg(long)]
    degree: Option<usize>,
    /// Output model file (default: <out-dir>/phph.mg1).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct StopArgs {
    /// Outer residual target.
    #[arg(long, default_value_t = 1e-15)]
    epsilon: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_outer: usize,
    #[arg(long, default_value_t = 100_000)]
    max_inner: usize,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Model file in MG1v1 format.
    model: PathBuf,
    /// natural | traditional | ubased | optimal:<q> | mass:<ell>:<q>
    #[arg(long, default_value = "ubased")]
    strategy: String,
    /// zero | identity | path to a matrix file
    #[arg(long, default_value = "zero")]
    x0: String,
    /// Run classical strategies through the outer/inner driver too.
    #[arg(long)]
    embedded: bool,
    #[command(flatten)]
    stop: StopArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    model: PathBuf,
    /// Smallest q+1.
    #[arg(long, default_value_t = 2)]
    from: usize,
    /// Largest q+1 (default: min(30, d)).
    #[arg(long)]
    to: Option<usize>,
    #[arg(long, default_value = "zero")]
    x0: String,
    /// Add natural, traditional and ubased rows.
    #[arg(long)]
    baselines: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output CSV (default: <out-dir>/sweep.csv).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    stop: StopArgs,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    model: PathBuf,
    #[arg(long, default_value = "ubased")]
    strategy: String,
    /// Matrix file with G; computed with the U-based iteration when absent.
    #[arg(long)]
    g: Option<PathBuf>,
    /// Output file (default: <out-dir>/diagnostics.txt).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mg1: {e}");
            e.exit_code()
        }
    }
}
