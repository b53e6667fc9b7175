//! Workbench for soft-tree tangent kernels: closed-form Gram matrices,
//! finite-ensemble convergence and training experiments, and the
//! cross-validated classification benchmark.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tntk_cli::commands::{self, OutputFormat, RunContext};

#[derive(Parser)]
#[command(
    name = "tntk",
    about = "Soft-tree tangent kernel workbench",
    long_about = "Computes closed-form limiting kernels for soft-tree ensembles, verifies them \
                  against finite ensembles, and runs kernel ridge regression benchmarks."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base seed for all randomness; the TNTK_SEED environment variable
    /// overrides this flag.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (defaults to <command>.<format> in the working directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap (defaults to the hardware parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Limiting Gram matrix of a kernel over a dataset, with extreme eigenvalues.
    Gram(commands::gram::GramArgs),
    /// Finite-ensemble kernel convergence to the closed form as M grows.
    Converge(commands::converge::ConvergeArgs),
    /// Gradient-descent outputs against the analytic gradient-flow trajectory.
    Trajectory(commands::trajectory::TrajectoryArgs),
    /// Kernel drift during training across ensemble sizes.
    Drift(commands::drift::DriftArgs),
    /// Vanilla versus oblivious empirical kernels against the shared limit.
    Oblivious(commands::oblivious::ObliviousArgs),
    /// Normalized kernel and expectation curves over the input inner product.
    Profile(commands::profile::ProfileArgs),
    /// Tuned 4-fold cross-validation benchmark over dataset files.
    Benchmark(commands::benchmark::BenchmarkArgs),
    /// Wall-clock Gram-computation time as a function of depth.
    Timing(commands::timing::TimingArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = match std::env::var("TNTK_SEED") {
        Ok(text) => match text.trim().parse::<u64>() {
            Ok(seed) => seed,
            Err(_) => {
                eprintln!("error: TNTK_SEED must be an unsigned integer, got {text:?}");
                return ExitCode::FAILURE;
            }
        },
        Err(_) => cli.seed,
    };
    let ctx = RunContext { seed, out: cli.out.clone(), threads: cli.threads, format: cli.format };

    let result = match &cli.command {
        Command::Gram(args) => commands::gram::run(args, &ctx),
        Command::Converge(args) => commands::converge::run(args, &ctx),
        Command::Trajectory(args) => commands::trajectory::run(args, &ctx),
        Command::Drift(args) => commands::drift::run(args, &ctx),
        Command::Oblivious(args) => commands::oblivious::run(args, &ctx),
        Command::Profile(args) => commands::profile::run(args, &ctx),
        Command::Benchmark(args) => commands::benchmark::run(args, &ctx),
        Command::Timing(args) => commands::timing::run(args, &ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
