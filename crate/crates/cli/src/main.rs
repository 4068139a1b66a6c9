//! `bilingame`: analyze, tune and simulate gradient dynamics on bilinear
//! zero-sum games.
//!
//! Exit codes: 0 success (for `analyze`: the method converges), 10 the
//! method diverges, 11 a limit cycle is possible, 2 usage errors, 3 I/O
//! errors.

mod params;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use bilingame::Error as LibError;

#[derive(Parser)]
#[command(name = "bilingame", version, about = "Gradient dynamics on bilinear zero-sum games")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convergence report (per-singular-value verdicts, radius, class)
    Analyze(CommandArgs),
    /// Simulate a trajectory, or run a full experiment config
    Simulate(CommandArgs),
    /// Spectral-radius heat map over an (alpha, beta) rectangle
    Heatmap(CommandArgs),
    /// Closed-form optimal parameters (or a grid search with --grid-step)
    Tune(CommandArgs),
    /// Shrinking-radius search for the best attainable rate on a box
    Search(CommandArgs),
    /// Jacobi-vs-Gauss-Seidel stability comparison on a parameter grid
    Region(CommandArgs),
    /// The two-dimensional WGAN toy: simulation and Hessian estimate
    Wgan(CommandArgs),
}

/// Every subcommand takes the same surface; which flags are meaningful
/// depends on the subcommand (see README). Unknown flags are rejected by
/// the parser.
#[derive(Args)]
struct CommandArgs {
    /// JSON parameter file; a manifest from a previous run is accepted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Path for the run manifest (default: derived from the output path)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Worker threads for grid computations (env: BILINGAME_THREADS)
    #[arg(long)]
    threads: Option<usize>,

    /// Algorithm: gd | eg | ogd | momentum | pp
    #[arg(long)]
    alg: Option<String>,
    /// Update style: jacobi | gs
    #[arg(long)]
    style: Option<String>,
    /// Step size (sets both players)
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    /// Extra-gradient half-step size; beta_i = alpha * gamma
    #[arg(long)]
    gamma: Option<f64>,
    /// Singular value (repeatable)
    #[arg(long = "sigma")]
    sigmas: Vec<f64>,
    /// Game file: JSON {"e": [[..]], "b": [..], "c": [..]}, bare nested
    /// arrays, or text with a "rows cols" header
    #[arg(long)]
    game: Option<PathBuf>,

    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Primary output file (CSV)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write full state components in trajectory CSV
    #[arg(long)]
    state: bool,
    /// Run a whole experiment config (JSON) instead of one spec
    #[arg(long)]
    experiment: Option<PathBuf>,
    /// Output directory for experiment curves / region CSVs
    #[arg(long)]
    out_dir: Option<PathBuf>,

    #[arg(long)]
    amin: Option<f64>,
    #[arg(long)]
    amax: Option<f64>,
    #[arg(long)]
    asteps: Option<usize>,
    #[arg(long)]
    bmin: Option<f64>,
    #[arg(long)]
    bmax: Option<f64>,
    #[arg(long)]
    bsteps: Option<usize>,
    /// Radius clamp for heat maps
    #[arg(long)]
    cap: Option<f64>,
    /// PGM image output path (heatmap)
    #[arg(long)]
    pgm: Option<PathBuf>,

    /// Grid step for search/region (and tune --grid-step)
    #[arg(long)]
    step: Option<f64>,
    /// Geometric shrink factor of the radius search
    #[arg(long)]
    shrink: Option<f64>,
    /// Local refinement rounds around the search witness
    #[arg(long)]
    refine: Option<usize>,
    /// Run tune as an exhaustive grid search with this step
    #[arg(long)]
    grid_step: Option<f64>,

    #[arg(long)]
    sigma1: Option<f64>,
    #[arg(long)]
    sigman: Option<f64>,

    /// WGAN: batch size
    #[arg(long)]
    batch: Option<usize>,
    /// WGAN: data/generator noise standard deviation
    #[arg(long)]
    noise: Option<f64>,
    /// WGAN: target mean components
    #[arg(long, num_args = 2)]
    target: Option<Vec<f64>>,
    /// WGAN: stochastic | deterministic
    #[arg(long)]
    mode: Option<String>,
    /// WGAN: also estimate the cross-Hessian at the saddle
    #[arg(long)]
    hessian: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.cmd {
        Cmd::Analyze(a) => ("analyze", a),
        Cmd::Simulate(a) => ("simulate", a),
        Cmd::Heatmap(a) => ("heatmap", a),
        Cmd::Tune(a) => ("tune", a),
        Cmd::Search(a) => ("search", a),
        Cmd::Region(a) => ("region", a),
        Cmd::Wgan(a) => ("wgan", a),
    };
    if let Err(code) = init_threads(args) {
        return code;
    }
    let result = match name {
        "analyze" => params::run_analyze(args),
        "simulate" => params::run_simulate(args),
        "heatmap" => params::run_heatmap(args),
        "tune" => params::run_tune(args),
        "search" => params::run_search(args),
        "region" => params::run_region(args),
        "wgan" => params::run_wgan(args),
        _ => unreachable!(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                LibError::Io(_) | LibError::Json(_) => 3,
                LibError::InvalidSpec(_) | LibError::ParseMatrix(_) | LibError::EmptyGrid => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn init_threads(args: &CommandArgs) -> Result<(), ExitCode> {
    let threads = args.threads.or_else(|| {
        std::env::var("BILINGAME_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return Err(ExitCode::from(2));
        }
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
