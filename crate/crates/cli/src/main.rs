//! `sweepvel`: solve sweeping-process problems from JSON specs and run the
//! verification suites.
//!
//! Exit codes: 0 success, 1 usage or malformed input, 2 numerical failure.

mod bundled;
mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sweepvel", version, about = "Sweeping processes with velocity constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a spec file (or a bundled spec by name) and certify the result.
    Solve(SolveArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
    /// Emit demonstration data.
    Demo(DemoArgs),
    /// Print a bundled spec, or list them when no name is given.
    Spec { name: Option<String> },
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Path to a JSON spec, or the name of a bundled spec.
    spec: String,
    /// Directory receiving `trajectory.csv` and `summary.json`.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Override the step count `N`.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the VI tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    suite: Suite,
    /// Spec to run the suite on; each suite has a bundled default.
    spec: Option<String>,
    /// Seed for randomized initial pairs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Number of initial pairs for the sensitivity suites.
    #[arg(long, default_value_t = 10)]
    pairs: usize,
    /// Blend weights (convexity) or shifts along the kernel (outer-estimate).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambdas: Option<Vec<f64>>,
    /// Values of k for the non-closedness table.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<u64>>,
    /// Perturbation magnitude for kernel-perturb.
    #[arg(long, default_value_t = 1.0)]
    magnitude: f64,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    c1_hat: Option<f64>,
    #[arg(long)]
    c2_hat: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args, Debug)]
struct DemoArgs {
    name: Demo,
    /// Members of the unbounded family to build.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,0,3")]
    lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    ks: Vec<u64>,
    #[arg(long)]
    steps: Option<usize>,
    /// File (nonclosedness) or directory (unbounded) for the output.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Suite {
    #[value(name = "sensitivity-a0")]
    SensitivityA0,
    #[value(name = "sensitivity-a1")]
    SensitivityA1,
    #[value(name = "bound-h3a")]
    BoundH3a,
    #[value(name = "bound-h3b")]
    BoundH3b,
    #[value(name = "bound-h3c")]
    BoundH3c,
    Gronwall,
    Convexity,
    #[value(name = "outer-estimate")]
    OuterEstimate,
    #[value(name = "kernel-perturb")]
    KernelPerturb,
    Nonclosedness,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Demo {
    Nonclosedness,
    Unbounded,
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("SWEEPVEL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("SWEEPVEL_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure thread pool: {e}")))
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
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::Demo(args) => commands::demo(&args),
        Command::Spec { name } => commands::spec(name.as_deref()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Numerical(m) => eprintln!("FAIL: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
