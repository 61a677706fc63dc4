//! `polyion` command-line runner.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod experiments;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Levels,
    Transitions,
    Alpha,
    Potential,
    Heat,
    Readout,
    Search,
    Prepare,
    Chiral,
    Scan,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Levels => "levels",
            Self::Transitions => "transitions",
            Self::Alpha => "alpha",
            Self::Potential => "potential",
            Self::Heat => "heat",
            Self::Readout => "readout",
            Self::Search => "search",
            Self::Prepare => "prepare",
            Self::Chiral => "chiral",
            Self::Scan => "scan",
        }
    }
}

/// Trapped polyatomic-ion state readout laboratory.
#[derive(Debug, Parser)]
#[command(version, about)]
pub struct Cli {
    /// Species file (JSON).
    #[arg(long)]
    species: PathBuf,
    /// Trap, lattice, drive and readout file (JSON).
    #[arg(long)]
    trap: PathBuf,
    #[arg(long, value_enum)]
    experiment: Experiment,
    #[arg(long)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dotted-key overrides, e.g. `heating.n_traj=100` or `species.A_GHz=9`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Validate the inputs and exit without running.
    #[arg(long)]
    check: bool,
}

/// Exit status: 2 for invalid input, 3 for a numerical failure.
pub enum Failure {
    Schema(Vec<String>),
    Numeric(String),
}

impl From<polyion::Error> for Failure {
    fn from(e: polyion::Error) -> Self {
        match e {
            polyion::Error::Config(m) => Failure::Schema(vec![m]),
            polyion::Error::Io(e) => Failure::Schema(vec![e.to_string()]),
            polyion::Error::Json(e) => Failure::Schema(vec![e.to_string()]),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("POLYION_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    match experiments::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Schema(diags)) => {
            for d in diags {
                eprintln!("error: {d}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
