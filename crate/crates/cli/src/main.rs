//! `qverify`: verifies the identity catalog at sampled parameter points.
//!
//! Exit status: 0 pass, 1 verification failure, 2 usage or config error,
//! 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qverify_core::Error;

use config::{FileConfig, Format, RunFlags};

#[derive(Debug, Parser)]
#[command(
    name = "qverify",
    version,
    about = "Multiprecision checks of basic hypergeometric identities"
)]
struct Cli {
    /// JSON file with default run settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List registered identities.
    List {
        ids: Vec<String>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Compare both sides at sampled points.
    Verify {
        /// Identity ids, or `all`.
        ids: Vec<String>,
        #[command(flatten)]
        flags: RunFlags,
        /// Scale every right side by this factor (negative control).
        #[arg(long)]
        perturb_rhs: Option<f64>,
        #[arg(long)]
        verbose: bool,
    },
    /// Relative errors over a parameter grid.
    Sweep {
        id: String,
        /// `name=lo:hi:step` or `name=value`, once per parameter.
        #[arg(long = "param", required = true)]
        params: Vec<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Extrapolate a q-identity to q = 1 and compare with its classical counterpart.
    Limit {
        /// Pair id such as `G2:G1`.
        pair: String,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        c: Option<String>,
        /// Parameters as `a=3,b=2`; overrides the pair's defaults.
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        j0: Option<u32>,
        #[arg(long)]
        j1: Option<u32>,
        #[arg(long)]
        tolerance: Option<String>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Summation-by-parts certificate of a theorem at sampled points.
    Certify {
        theorem: String,
        #[command(flatten)]
        flags: RunFlags,
        /// Scale the claimed value by this factor (negative control).
        #[arg(long)]
        perturb_claim: Option<f64>,
        #[arg(long)]
        verbose: bool,
    },
}

/// A run that ended without a report.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() { 3 } else { 2 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// A rendered report and the status it implies.
pub struct Outcome {
    pub body: String,
    pub code: u8,
    pub output: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::List { ids, format } => {
            commands::list(&ids, format.or(file.format).unwrap_or_default())
        }
        Command::Verify {
            ids,
            flags,
            perturb_rhs,
            verbose,
        } => {
            let cfg = config::RunConfig::resolve(ids, flags, file)?;
            commands::verify(&cfg, perturb_rhs, verbose)
        }
        Command::Sweep { id, params, flags } => {
            let cfg = config::RunConfig::resolve(vec![id], flags, file)?;
            commands::sweep(&cfg, &params)
        }
        Command::Limit {
            pair,
            a,
            b,
            c,
            point,
            order,
            j0,
            j1,
            tolerance,
            format,
            output,
        } => {
            let args = commands::LimitArgs {
                pair,
                overrides: [("a", a), ("b", b), ("c", c)]
                    .into_iter()
                    .filter_map(|(n, v)| v.map(|v| (n, v)))
                    .collect(),
                point,
                order,
                j0,
                j1,
                tolerance: tolerance.or(file.tolerance.clone()),
                format: format.or(file.format).unwrap_or_default(),
                output: output.or(file.output.clone()),
            };
            commands::limit(&args)
        }
        Command::Certify {
            theorem,
            flags,
            perturb_claim,
            verbose,
        } => {
            let cfg = config::RunConfig::resolve(vec![theorem], flags, file)?;
            commands::certify(&cfg, perturb_claim, verbose)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            match &outcome.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &outcome.body) {
                        eprintln!("qverify: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{}", outcome.body),
            }
            ExitCode::from(outcome.code)
        }
        Err(f) => {
            eprintln!("qverify: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
