//! `visolve`: run, compare and validate solvers for monotone variational
//! inequality and equilibrium problems.
//!
//! Exit codes: 0 when every requested run converged, 2 when a run stopped
//! at its iteration budget, 1 on any error (unknown problem, invalid
//! configuration, mid-run numerical failure, failed validation).

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vi_harness::config::{parse_coords, resolve, Algorithm, FileConfig, Overrides};
use vi_harness::run::{
    compare, execute, exit_code, maybe_write_trace, problem_listing, summarize, validate,
};

#[derive(Parser)]
#[command(name = "visolve", version, about = "Variational inequality solver harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one algorithm on one registered problem
    Run(RunArgs),
    /// Run several algorithms on one problem and tabulate convergence
    Compare(CompareArgs),
    /// Check the structural assumptions of a registered problem
    Validate(ValidateArgs),
    /// List the registered problems
    Problems,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem id from the registry
    #[arg(long)]
    problem: Option<String>,
    /// Starting point as semicolon-separated coordinates, e.g. "1.5;-2"
    #[arg(long)]
    x0: Option<String>,
    /// Iteration budget
    #[arg(long)]
    max_iter: Option<usize>,
    /// Step-size tolerance of the stopping rule
    #[arg(long)]
    tol_step: Option<f64>,
    /// Forward-residual tolerance of the stopping rule
    #[arg(long)]
    tol_residual: Option<f64>,
    /// Literal harmonic step sizes (reproduces published tables; the first
    /// steps exceed the stable cap and are logged)
    #[arg(long)]
    strict_paper: bool,
    /// Constant step size (schemes) or initial step (baselines)
    #[arg(long)]
    lambda: Option<f64>,
    /// Resolvent parameter for the equilibrium scheme
    #[arg(long)]
    r: Option<f64>,
    /// Seed recorded with the run; the solvers are deterministic and
    /// ignore it, sampled checks use it
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// One of: alg1, alg2, korpelevich, tseng, thong
    #[arg(long)]
    algorithm: Option<String>,
    /// Write the full iterate trace to this CSV file
    #[arg(long, visible_alias = "out")]
    trace: Option<PathBuf>,
    /// Print the full iterate trace to stdout
    #[arg(long)]
    print_trace: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated algorithms, e.g. "alg1,alg2,korpelevich"
    #[arg(long)]
    algorithms: String,
    /// Write the comparison table to this CSV file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Problem id from the registry
    #[arg(long)]
    problem: String,
    /// Random samples per check
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Worst admissible violation
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// RNG seed for the sampled checks
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn build_overrides(common: &CommonArgs, algorithm: Option<Algorithm>) -> Result<Overrides, String> {
    Ok(Overrides {
        problem: common.problem.clone(),
        algorithm,
        x0: common.x0.as_deref().map(parse_coords).transpose()?,
        max_iter: common.max_iter,
        tol_step: common.tol_step,
        tol_residual: common.tol_residual,
        seed: common.seed,
        strict_paper: common.strict_paper,
        lambda: common.lambda,
        r: common.r,
        trace: None,
    })
}

fn load_file(common: &CommonArgs) -> Result<Option<FileConfig>, String> {
    common.config.as_deref().map(FileConfig::load).transpose()
}

fn cmd_run(args: RunArgs) -> Result<i32, String> {
    let algorithm = args.algorithm.as_deref().map(str::parse).transpose()?;
    let mut overrides = build_overrides(&args.common, algorithm)?;
    overrides.trace = args.trace.clone();
    let settings = resolve(load_file(&args.common)?, overrides)?;
    let outcome = execute(&settings).map_err(|e| e.to_string())?;
    maybe_write_trace(&settings, &outcome).map_err(|e| e.to_string())?;
    print!("{}", summarize(&outcome));
    if args.print_trace {
        print!("{}", vi_harness::run::trace_csv(&outcome));
    }
    if let vi_core::algorithms::RunStatus::Failed(msg) = &outcome.trace.status {
        eprintln!("run failed: {msg}");
    }
    Ok(exit_code(&outcome.trace.status))
}

fn cmd_compare(args: CompareArgs) -> Result<i32, String> {
    let mut algorithms = Vec::new();
    for name in args.algorithms.split(',') {
        algorithms.push(name.trim().parse::<Algorithm>()?);
    }
    let overrides = build_overrides(&args.common, None)?;
    let settings = resolve(load_file(&args.common)?, overrides)?;
    let (csv, code) = compare(&settings, &algorithms).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(code)
}

fn cmd_validate(args: ValidateArgs) -> Result<i32, String> {
    let (reports, all_pass) =
        validate(&args.problem, args.samples, args.tol, args.seed).map_err(|e| e.to_string())?;
    for r in &reports {
        println!("{r}");
    }
    if all_pass {
        println!("problem '{}': all checks passed", args.problem);
        Ok(0)
    } else {
        println!("problem '{}': checks FAILED", args.problem);
        Ok(1)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter("VI_LOG").write_style("VI_LOG_STYLE"),
    )
    .format_timestamp(None)
    .init();

    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::Validate(args) => cmd_validate(args),
        Cmd::Problems => {
            print!("{}", problem_listing());
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
