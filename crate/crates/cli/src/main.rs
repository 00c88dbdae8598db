use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use relu_pwl::rational::parse_rational;
use relu_pwl::{LossKind, Rational};

mod commands;
mod io;

#[derive(Parser, Debug)]
#[command(name = "relu-pwl", version, about = "Exact piecewise-linear calculus for ReLU networks")]
struct Cli {
    /// Seed for every randomized choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for cell enumeration and training (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a hard function, a random PWL function or a random zonotope.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Build a network from a pwl-v1, hinge-v1 or zonotope-v1 file.
    Build(BuildArgs),
    /// Count activation cells and pieces of a network.
    Count(CountArgs),
    /// Globally optimal training of a 2-layer network on a CSV dataset.
    Train(TrainArgs),
    /// Check a network against the piece and size bounds.
    Verify(VerifyArgs),
    /// Sample a network (or a zonotope support function) on a grid.
    Sample(SampleArgs),
}

#[derive(Subcommand, Debug)]
enum GenerateKind {
    /// Composed sawtooth with w pieces per layer and k layers on [0, M].
    Sawtooth {
        #[arg(long)]
        w: usize,
        #[arg(long)]
        k: usize,
        #[arg(long = "M", alias = "height", default_value = "1", value_parser = rational)]
        m: Rational,
        /// Emit the network or the exact PWL function.
        #[arg(long, value_enum, default_value_t = Emit::Net)]
        emit: Emit,
    },
    /// Sawtooth composed with the support function of a zonotope.
    ZonotopeFamily {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        w: usize,
        #[arg(long)]
        k: usize,
        #[arg(long = "M", alias = "height", default_value = "1", value_parser = rational)]
        height: Rational,
        /// Use these generators (zonotope-v1) instead of seeded random ones.
        #[arg(long)]
        generators: Option<PathBuf>,
    },
    /// Random normalized PWL function with the given number of pieces.
    RandomPwl {
        #[arg(long)]
        pieces: usize,
    },
    /// Random zonotope with m rational generators in R^n.
    RandomZonotope {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Emit {
    Net,
    Pwl,
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Input file; its "format" field selects the builder.
    input: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct BoxArgs {
    /// Lower corner of the cube [lo, hi]^n (default -1024).
    #[arg(long, allow_hyphen_values = true, value_parser = rational)]
    lo: Option<Rational>,
    /// Upper corner of the cube [lo, hi]^n (default 1024).
    #[arg(long, allow_hyphen_values = true, value_parser = rational)]
    hi: Option<Rational>,
}

#[derive(Args, Debug)]
struct CountArgs {
    net: PathBuf,
    #[command(flatten)]
    bounds: BoxArgs,
    /// Export every cell as one JSON line.
    #[arg(long)]
    cells: Option<PathBuf>,
    /// Write the CSV summary {cells, merged_pieces, wall_ms}.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Fill the wall_ms column (otherwise left empty so reruns match byte for byte).
    #[arg(long)]
    timing: bool,
    /// Compare against w^k for a sawtooth net: "W,K".
    #[arg(long, value_parser = usize_list)]
    sawtooth: Option<UsizeList>,
    /// Compare against the zonotope-family formulas: "N,M,W,K".
    #[arg(long, value_parser = usize_list)]
    zonotope_family: Option<UsizeList>,
    /// Maximum number of cells.
    #[arg(long, default_value_t = relu_pwl::regions::DEFAULT_CELL_BUDGET)]
    budget: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// global-1d for scalar inputs, global otherwise.
    Auto,
    Global,
    #[value(name = "global-1d")]
    Global1d,
    #[value(name = "global-1d-units")]
    Global1dUnits,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// CSV with columns x1..xn, y (an optional header row is skipped).
    data: PathBuf,
    /// Hidden units (unit trainers) or pieces (global-1d).
    #[arg(long)]
    width: usize,
    #[arg(long, default_value = "squared", value_parser = loss_kind)]
    loss: LossKind,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Maximum number of convex subproblems.
    #[arg(long, default_value_t = 5_000_000)]
    budget: u64,
    /// Solve every subproblem (no symmetry pruning).
    #[arg(long)]
    verify: bool,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    /// Also write the fitted network (relu-net-v1).
    #[arg(long)]
    net_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    net: PathBuf,
    #[command(flatten)]
    bounds: BoxArgs,
    #[arg(long, default_value_t = relu_pwl::regions::DEFAULT_CELL_BUDGET)]
    budget: usize,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Network file (relu-net-v1) or zonotope file (zonotope-v1, samples the support function).
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true, default_value = "0", value_parser = rational)]
    lo: Rational,
    #[arg(long, allow_hyphen_values = true, default_value = "1", value_parser = rational)]
    hi: Rational,
    /// Grid points per axis.
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Print exact rationals instead of decimals.
    #[arg(long)]
    exact: bool,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn loss_kind(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: relu_pwl::Error| e.to_string())
}

/// Comma-separated naturals such as `2,3`.
#[derive(Clone, Debug)]
struct UsizeList(Vec<usize>);

fn usize_list(s: &str) -> Result<UsizeList, String> {
    s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<_, _>>().map(UsizeList)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use relu_pwl::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::BudgetExceeded(_) => 3,
                E::NonConvergence(_) | E::Invariant(_) => 4,
                E::Parse(_) | E::Invalid(_) | E::DimensionMismatch { .. } | E::Json(_) => 2,
            };
        }
        if cause.downcast_ref::<commands::Violation>().is_some() {
            return 4;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.threads {
            if t == 0 {
                anyhow::bail!(relu_pwl::Error::Invalid("--threads must be at least 1".into()));
            }
            pool = pool.num_threads(t);
        }
        let pool = pool.build().context("starting worker pool")?;
        pool.install(|| commands::run(&cli))
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
