//! `solvferm`: build, verify and export reversible kernels, classical
//! Hamiltonians, spectra and free-fermion observables.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status contract: 0 success, 1 tolerance failure, 2 usage or domain
/// error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    ToleranceFailure = 1,
    UsageError = 2,
}

#[derive(Debug, Parser)]
#[command(name = "solvferm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel K(x,y) (column-stochastic) and its stationary distribution.
    Kernel(RunArgs),
    /// Symmetric Hamiltonian H = diag(√π)⁻¹ K diag(√π).
    Hamiltonian(RunArgs),
    /// Closed-form eigenvalues κ(n), checked against a dense solver.
    Spectrum(RunArgs),
    /// Orthonormal eigenvectors φ̂_n (one column per mode).
    Eigvecs(RunArgs),
    /// Ground-state correlation matrix of the free-fermion model.
    Correlation(RunArgs),
    /// Block entanglement entropy, swept over blocks [0, ℓ) for ℓ = 0..size.
    Entropy(RunArgs),
    /// Run every invariant check for a recipe and print a report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by all subcommands.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Recipe line, e.g. "krawtchouk type=i a=0.3 b=0.5 N=5" or
    /// "charlier type=i a=0.5 b=1.0 eps=1e-12".
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub recipe: Option<String>,
    /// JSON sweep: {"recipes": [...], "sizes": [...], "tail_eps": [...]}.
    /// With --out, the path is a directory receiving one file per run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file (written atomically); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the tolerance of the subcommand's check.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Chemical potential: modes with κ(n) < mu are filled.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    /// Single block a:b (half-open) for the entropy subcommand.
    #[arg(long, value_parser = parse_block)]
    pub block: Option<(usize, usize)>,
    /// Stationary tail bound for semi-infinite recipes without eps= or M=.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Largest lattice for which the many-body oracle check is run.
    #[arg(long, default_value_t = 8)]
    pub oracle_cap: usize,
    /// Test hook: perturb K(row, col) by 1e-6 before verifying.
    #[arg(long, value_parser = parse_block, hide = true)]
    pub inject_fault: Option<(usize, usize)>,
}

fn parse_block(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected a:b, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b {
        return Err(format!("empty range {a}:{b} (need a <= b)"));
    }
    Ok((a, b))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Kernel(a) => commands::run(commands::Kind::Kernel, &a, None),
        Command::Hamiltonian(a) => commands::run(commands::Kind::Hamiltonian, &a, None),
        Command::Spectrum(a) => commands::run(commands::Kind::Spectrum, &a, None),
        Command::Eigvecs(a) => commands::run(commands::Kind::Eigvecs, &a, None),
        Command::Correlation(a) => commands::run(commands::Kind::Correlation, &a, None),
        Command::Entropy(a) => commands::run(commands::Kind::Entropy, &a, None),
        Command::Verify(v) => commands::run(commands::Kind::Verify, &v.run, Some(&v)),
    };
    ExitCode::from(status as u8)
}
