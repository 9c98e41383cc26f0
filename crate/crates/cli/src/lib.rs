//! The `strukt` command line: linearize, recover, perturb, certify, sigma-min, eigs.
//!
//! Exit codes: 0 success, 1 numerical failure or certification violation,
//! 2 invalid input or usage.

pub mod commands;
pub mod config;
pub mod io;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use strukt_core::backward::{BlockMask, ThresholdMode};
use strukt_core::linearize::Placement;
use strukt_core::polycore::StructureKind;

/// Command failure, mapped to an exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CliError {
    /// Bad input file, flag or configuration (exit 2).
    Input(String),
    /// Numerical failure (exit 1).
    Failure(String),
    /// A certified trial broke its bound (exit 1).
    Certification(String),
}

impl CliError {
    /// Process exit code.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) | CliError::Certification(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Failure(m) => write!(f, "numerical failure: {m}"),
            CliError::Certification(m) => write!(f, "certification failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Table output format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Comma-separated values with a header row.
    Csv,
    /// A JSON array of objects.
    Json,
}

fn parse_with<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn parse_kind(s: &str) -> Result<StructureKind, String> {
    parse_with(s)
}

fn parse_placement(s: &str) -> Result<Placement, String> {
    parse_with(s)
}

fn parse_mode(s: &str) -> Result<ThresholdMode, String> {
    parse_with(s)
}

fn parse_blocks(s: &str) -> Result<BlockMask, String> {
    commands::parse_blocks(s)
}

/// Flags shared by all subcommands.
#[derive(Args, Clone, Debug, Default)]
pub struct GlobalOpts {
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance: fixed-point residual for certify, relative error for sigma-min.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Threshold mode: certified or empirical.
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<ThresholdMode>,
    /// Output file; tables go to stdout when absent.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

/// Overrides of a certification campaign.
#[derive(Args, Clone, Debug, Default)]
pub struct CertifyArgs {
    /// Campaign config (JSON); built-in defaults when absent.
    pub config: Option<PathBuf>,
    /// Structure.
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<StructureKind>,
    /// Odd grade of the random P.
    #[arg(long)]
    pub grade: Option<usize>,
    /// Size of the random P.
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Placement: tridiagonal or stacked.
    #[arg(long, value_parser = parse_placement)]
    pub placement: Option<Placement>,
    /// Comma-separated perturbation norms.
    #[arg(long, value_delimiter = ',')]
    pub norms: Option<Vec<f64>>,
    /// Trials per norm.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Record per-trial wall time (makes the report nondeterministic).
    #[arg(long)]
    pub timing: bool,
    /// Skip the eigenvalue comparison.
    #[arg(long)]
    pub no_eigs: bool,
}

/// Subcommands.
#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Build the structured pencil of an odd-grade polynomial file.
    Linearize {
        /// Polynomial file.
        input: PathBuf,
        /// Structure of the input.
        #[arg(long, value_parser = parse_kind)]
        kind: StructureKind,
        /// Placement: tridiagonal or stacked.
        #[arg(long, value_parser = parse_placement, default_value = "tridiagonal")]
        placement: Placement,
        /// Sign of the pencil; must match the structure.
        #[arg(long, allow_negative_numbers = true)]
        sigma: Option<i8>,
    },
    /// Recover the polynomial from a pencil file and its sidecar.
    Recover {
        /// Pencil file.
        pencil: PathBuf,
    },
    /// Add a random structured perturbation of given norm to a pencil.
    Perturb {
        /// Pencil file.
        pencil: PathBuf,
        /// Frobenius norm of the perturbation.
        #[arg(long)]
        norm: f64,
        /// Blocks to perturb, e.g. `11,21,22`.
        #[arg(long, value_parser = parse_blocks, default_value = "11,21,22")]
        blocks: BlockMask,
    },
    /// Run a backward error certification campaign.
    Certify(CertifyArgs),
    /// Tabulate the smallest singular value of the structured Sylvester operator.
    SigmaMin {
        /// Largest k.
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        /// Comma-separated structures; all when absent.
        #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
        kinds: Vec<StructureKind>,
        /// Block size.
        #[arg(long = "n", default_value_t = 1)]
        n: usize,
    },
    /// Eigenvalues of a polynomial or pencil file.
    Eigs {
        /// Polynomial file, or pencil file with a sidecar.
        input: PathBuf,
        /// Report the eigenvalue symmetry expected of this structure.
        #[arg(long, value_parser = parse_kind)]
        kind: Option<StructureKind>,
    },
}

/// Command line.
#[derive(Parser, Clone, Debug)]
#[command(name = "strukt", version, about = "Structured linearizations of matrix polynomials")]
pub struct Cli {
    /// Shared flags.
    #[command(flatten)]
    pub global: GlobalOpts,
    /// Subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Parse `args` (program name first) and run.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match commands::dispatch(&cli.command, &cli.global) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
