mod commands;
mod config;
mod pool;
mod problem;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{bench, chol, dft, evals, generate, shatter, sweep};

#[derive(Parser)]
#[command(
    name = "densmat",
    version,
    about = "Finite-precision Hermitian eigensolvers and density matrices"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct GlobalArgs {
    /// Master seed; every random draw is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Run on an emulated machine with this many significand bits (plus the implicit one).
    #[arg(long, global = true)]
    pub emulate_bits: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    /// TOML file with `backend`, `emulate_bits` and a `[constants]` table.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one stability constant, e.g. `--set c1=100`. Repeatable.
    #[arg(long = "set", global = true, value_name = "NAME=VALUE")]
    pub overrides: Vec<String>,
    /// Write the JSON run report here instead of stdout.
    #[arg(long, global = true)]
    pub json_out: Option<PathBuf>,
    /// Add differential comparisons against the reference routines.
    #[arg(long, global = true)]
    pub oracle: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Classical,
    Strassen,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded test problem.
    Generate(generate::Opts),
    /// Perturb matrices and collect gap statistics.
    Shatter(shatter::Opts),
    /// Eigenvalues (or singular values) of a matrix file.
    Evals(evals::Opts),
    /// Recursive Cholesky factorization.
    Chol(chol::Opts),
    /// Fermi level and gap.
    Fermi(dft::FermiOpts),
    /// Density matrix below the Fermi level.
    Density(dft::DensityOpts),
    /// Full pipeline on a problem container.
    Ks(dft::KsOpts),
    /// Time the main operations.
    Bench(bench::Opts),
    /// Success rate of an operation across emulated bit widths, as CSV.
    SweepPrecision(sweep::Opts),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = config::Context::from_args(&cli.global).and_then(|ctx| match &cli.command {
        Command::Generate(o) => generate::run(&ctx, o),
        Command::Shatter(o) => shatter::run(&ctx, o),
        Command::Evals(o) => evals::run(&ctx, o),
        Command::Chol(o) => chol::run(&ctx, o),
        Command::Fermi(o) => dft::run_fermi(&ctx, o),
        Command::Density(o) => dft::run_density(&ctx, o),
        Command::Ks(o) => dft::run_ks(&ctx, o),
        Command::Bench(o) => bench::run(&ctx, o),
        Command::SweepPrecision(o) => sweep::run(&ctx, o),
    });
    let emitted = result.and_then(|mut r| {
        r.timing_ms = start.elapsed().as_secs_f64() * 1e3;
        r.emit(cli.global.json_out.as_deref())
    });
    match emitted {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", report::describe(&e));
            ExitCode::from(report::exit_code(&e))
        }
    }
}
