//! `qwpersist`: simulation, persistence, closed-form theory and exponent fits
//! for coined quantum walks, as plot-ready CSV and JSON.
//!
//! Exit codes: 0 success, 2 usage or domain error, 3 numeric or fit failure.

mod commands;
mod init_spec;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::init_spec::{parse_real, InitSpec};

#[derive(Debug, Parser)]
#[command(name = "qwpersist", version, about = "Persistence of unvisited sites in coined quantum walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Position distribution after a number of steps, with the theory overlay.
    Simulate(SimulateArgs),
    /// Persistence of sites as a function of the number of steps.
    Persist(PersistArgs),
    /// Closed-form theory tabulated over a grid.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Fit a persistence column produced by `persist`.
    Fit(FitArgs),
    /// Simulate, fit and compare against theory in one go.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Walk {
    Two,
    Three,
}

#[derive(Debug, Clone, Args)]
pub struct WalkArgs {
    /// Coin family; inferred from --init when omitted.
    #[arg(long, value_enum)]
    pub walk: Option<Walk>,
    /// Coin parameter in (0, 1); also accepts 1/sqrt2 and 1/sqrt3.
    #[arg(long, value_parser = parse_rho)]
    pub rho: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output file (default: stdout, or a file in $QWPERSIST_OUT_DIR when set).
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    /// Initial coin state (e.g. chi+, sigma+, asym, eig:..., std:..., mix:...).
    #[arg(long)]
    pub init: InitSpec,
    #[arg(long)]
    pub steps: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PersistMethod {
    Exact,
    LogApprox,
    DensityApprox,
    TheoryAsymptote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mixing {
    /// Mixed state re-prepared before every run.
    PerRun,
    /// One pure component drawn for the whole experiment.
    Ensemble,
}

#[derive(Debug, Args)]
pub struct PersistArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub init: InitSpec,
    /// Comma-separated non-zero sites, e.g. 2,-2.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub sites: Vec<i64>,
    #[arg(long)]
    pub steps: usize,
    /// Comma-separated methods; one column per site and method.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact")]
    pub method: Vec<PersistMethod>,
    #[arg(long, value_enum, default_value = "per-run")]
    pub mixing: Mixing,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// Weak-limit density w(v) on a grid over (-rho, rho).
    Density {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long)]
        init: InitSpec,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Trapping probabilities p_inf(m) (three-state walks).
    Trap {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long)]
        init: InitSpec,
        /// Sites (default -5..=5).
        #[arg(long = "m", value_delimiter = ',', allow_hyphen_values = true)]
        sites: Vec<i64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Power-law exponent lambda.
    Lambda {
        #[command(flatten)]
        walk: WalkArgs,
        /// Needed for three-state walks only.
        #[arg(long)]
        init: Option<InitSpec>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Decay rates gamma(m).
    Gamma {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long)]
        init: InitSpec,
        #[arg(long = "m", value_delimiter = ',', allow_hyphen_values = true, required = true)]
        sites: Vec<i64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// I_m(T): closed form, large-T form and quadrature side by side.
    Integral {
        #[command(flatten)]
        walk: WalkArgs,
        /// Defaults to the balanced eigenstate (sym2 or asym).
        #[arg(long)]
        init: Option<InitSpec>,
        #[arg(long = "m", value_delimiter = ',', allow_hyphen_values = true, required = true)]
        sites: Vec<i64>,
        #[arg(long = "T", value_delimiter = ',', required = true)]
        steps: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Power,
    Exponential,
    Combined,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV written by `persist`.
    #[arg(long)]
    pub input: std::path::PathBuf,
    /// Column to fit (default: the first column after T).
    #[arg(long)]
    pub column: Option<String>,
    /// Site of the column; read from a `_m<site>` suffix when omitted.
    #[arg(long = "m", allow_hyphen_values = true)]
    pub site: Option<i64>,
    #[arg(long, value_enum)]
    pub model: Model,
    /// Fit window LO,HI (default: [T/100, T] for power and combined, [T/2, T] for exponential).
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(usize, usize)>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub init: InitSpec,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub sites: Vec<i64>,
    #[arg(long)]
    pub steps: usize,
    /// Window LO,HI for power and combined fits.
    #[arg(long, value_parser = parse_window)]
    pub power_window: Option<(usize, usize)>,
    /// Window LO,HI for exponential fits.
    #[arg(long, value_parser = parse_window)]
    pub exp_window: Option<(usize, usize)>,
    #[command(flatten)]
    pub out: OutArgs,
}

fn parse_rho(s: &str) -> Result<f64, String> {
    match parse_real(s) {
        Some(rho) if rho > 0.0 && rho < 1.0 => Ok(rho),
        Some(rho) => Err(format!("rho = {rho} is outside (0, 1)")),
        None => Err(format!("`{s}` is not a number")),
    }
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("`{x}` is not a step count"));
    match s.split_once(',') {
        Some((lo, hi)) => Ok((parse(lo)?, parse(hi)?)),
        None => Err("window must be written LO,HI".into()),
    }
}

/// Failure with the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<qwpersist::Error> for CliError {
    fn from(e: qwpersist::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let invocation: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a, &invocation),
        Command::Persist(a) => commands::persist(&a, &invocation),
        Command::Theory(t) => commands::theory(&t, &invocation),
        Command::Fit(a) => commands::fit_command(&a, &invocation),
        Command::Compare(a) => commands::compare(&a, &invocation),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qwpersist: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
