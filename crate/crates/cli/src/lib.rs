//! Configuration, orchestration and artifact persistence for the `choquard` binary.
//!
//! Exit codes: 0 success, 1 validation or config failure, 2 numerical non-convergence, 3 I/O error.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::{RunConfig, Workflow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("did not converge: {0}")]
    NotConverged(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 1,
            CliError::NotConverged(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "choquard", version, about = "Equivariant solver and checks for the magnetic Choquard equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; each command writes into its own subdirectory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Permits N = 2 and tags every artifact as nonrigorous.
    #[arg(long, global = true)]
    pub nonrigorous: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissibility and symmetry compatibility report.
    Validate,
    /// Radial ground states over the configured λ list.
    Ground,
    /// Equivariant grid solve.
    Solve,
    /// Multi-bump threshold certificates.
    Bumps,
    /// Decay-window checks of the limit ground state.
    Decay,
    /// Consolidated report over verified artifact directories.
    Report {
        /// Defaults to `--out`.
        run_dir: Option<PathBuf>,
    },
}

pub const DEFAULT_OUT: &str = "out";

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path)?;
    Ok(RunConfig::parse(&text)?.with_overrides(cli.seed, cli.nonrigorous))
}

/// Runs one invocation, printing a JSON summary on stdout and errors on stderr.
pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Report { run_dir } => {
            let dir = run_dir.clone().or_else(|| cli.out.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
            report::report(&dir).map(|(path, sections)| {
                println!("{}", serde_json::json!({ "report": path, "sections": sections }));
                0
            })
        }
        cmd => {
            let workflow = match cmd {
                Command::Validate => Workflow::Validate,
                Command::Ground => Workflow::Ground,
                Command::Solve => Workflow::Solve,
                Command::Bumps => Workflow::Bumps,
                _ => Workflow::Decay,
            };
            load(cli).and_then(|cfg| {
                let out = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
                let o = commands::run(workflow, &cfg, &out)?;
                println!("{}", serde_json::json!({ "dir": o.dir, "exit": o.code, "summary": o.summary }));
                Ok(o.code)
            })
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

/// Parses `args` (including the program name); usage errors exit 1, help and version exit 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
