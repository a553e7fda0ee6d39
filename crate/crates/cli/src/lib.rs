//! Command-line front end for `eeqt-core`.
//!
//! Every command writes CSV with `#`-prefixed metadata lines (tool version,
//! config hash, seed) ahead of a header row. Exit codes: 0 success, 1 usage
//! error, 2 config error, 3 numerical-guard failure, 4 reproduction row out
//! of tolerance.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}", format_config(.path, *.line, .message))]
    Config { path: String, line: Option<usize>, message: String },
    #[error("numerical guard: {0}")]
    Numerical(String),
    #[error("{0} reproduction row(s) outside tolerance")]
    Reproduction(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

fn format_config(path: &str, line: Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("{path}:{l}: {message}"),
        None => format!("{path}: {message}"),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Reproduction(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "eeqt", version, about = "Hybrid quantum-classical detector simulation and transmission planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write CSV here instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the configured system and write the trajectory.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Tabulate the closed-form response of the configured detector.
    Efficiency {
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Report shape, topology and CP status of couplings. Without a config,
    /// reports the full shape catalogue.
    Validate {
        config: Option<PathBuf>,
        /// Seed for random probes and projector instantiation.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Scan the number of copies needed to decode at a confidence target.
    Plan(PlanArgs),
    /// Recompute the reference values and compare them with expectations.
    Reproduce {
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Config file whose [plan] section supplies defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Signal weight on the code projector.
    #[arg(long)]
    pub rho1: Option<f64>,
    /// Detector efficiency factor.
    #[arg(long)]
    pub eff: Option<f64>,
    /// Half-width of the decoding interval on rho1.
    #[arg(long)]
    pub accuracy: Option<f64>,
    /// Per-copy half-width of the count interval [default: eff * accuracy].
    #[arg(long)]
    pub margin: Option<f64>,
    /// Confidence target in (0, 1).
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Largest number of copies scanned [default: 100].
    #[arg(long)]
    pub m_max: Option<u64>,
    /// Per-copy registration probability of the confirming detector.
    #[arg(long)]
    pub p_reg: Option<f64>,
    /// Confidence target for the confirming detector [default: --confidence].
    #[arg(long)]
    pub di_confidence: Option<f64>,
    #[command(flatten)]
    pub out: Output,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("eeqt: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { config, out } => emit(&out, |w| commands::simulate(&config, w)),
        Command::Efficiency { config, out } => emit(&out, |w| commands::efficiency(&config, w)),
        Command::Validate { config, seed, out } => {
            emit(&out, |w| commands::validate(config.as_deref(), seed, w))
        }
        Command::Plan(args) => {
            let out = Output { output: args.out.output.clone() };
            emit(&out, |w| commands::plan(&args, w))
        }
        Command::Reproduce { out } => emit(&out, commands::reproduce),
    }
}

/// Renders into memory first so a failed command leaves no partial file.
fn emit<F>(out: &Output, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
{
    let mut buf = Vec::new();
    let result = f(&mut buf);
    if result.is_ok() || matches!(result, Err(CliError::Reproduction(_))) {
        match &out.output {
            Some(path) => std::fs::write(path, &buf)?,
            None => std::io::stdout().write_all(&buf)?,
        }
    }
    result
}
