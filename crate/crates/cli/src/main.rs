//! `kink`: solve, inspect and scan the nonlocal kink equation from the shell.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver did not reach a
//! kink, 3 a checked invariant failed.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kink_core::KinkError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "kink", version, about = "Kink solutions of Φ³ = T_qΦ")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for a kink at one deformation q
    Solve(SolveArgs),
    /// Compute the constants ledger
    Constants(ConstantsArgs),
    /// Run the analytic oracle, the discretisation cross-check and the cone suite
    Verify(VerifyArgs),
    /// Locate the end of the kink branch in q
    Scan(ScanArgs),
    /// Print kernel values and norms
    Kernel(KernelArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Grid half-width L
    #[arg(long = "L", default_value_t = 20.0, allow_negative_numbers = true)]
    pub half_width: f64,
    /// Grid spacing h
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub h: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Quadrature,
    Spectral,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    pub max_iter: usize,
    /// Damping weight ω in (0, 1]
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega: f64,
    /// erf, psi, sign or file:PATH (CSV or JSON profile)
    #[arg(long, default_value = "erf")]
    pub init: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Quadrature)]
    pub method: MethodArg,
    /// Solution path; the report goes to `<out>.report.json`. Stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Disable the cusp term in the trapezoid sums
    #[arg(long)]
    pub no_cusp_correction: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    #[arg(long = "q-max", default_value_t = 1.0, allow_negative_numbers = true)]
    pub q_max: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// A number, `q0`, or `q0/N`
    #[arg(long, default_value = "0")]
    pub q: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long = "q-min", default_value_t = 0.0, allow_negative_numbers = true)]
    pub q_min: f64,
    #[arg(long = "q-max", default_value_t = 3.0, allow_negative_numbers = true)]
    pub q_max: f64,
    #[arg(long, default_value_t = 12)]
    pub steps: usize,
    #[arg(long = "bisect-tol", default_value_t = 1e-4)]
    pub bisect_tol: f64,
    /// Re-solve every coarse sample from the erf guess
    #[arg(long = "cold-check", default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub cold_check: bool,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    pub max_iter: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    /// JSON report path; a CSV table is written next to it. Stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    /// Points at which to evaluate K_q and K_q'
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4", allow_negative_numbers = true)]
    pub x: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<KinkError> for Failure {
    fn from(e: KinkError) -> Self {
        let code = match e {
            KinkError::LedgerInvariant(_) | KinkError::Quadrature { .. } => EXIT_INVARIANT,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Constants(a) => commands::constants(a),
        Command::Verify(a) => commands::verify(a),
        Command::Scan(a) => commands::scan(a),
        Command::Kernel(a) => commands::kernel(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
