//! `phasebc`: simulate sessions, evaluate bounds, plan parameters, verify the
//! delayed-choice attack and emit Wigner grids.

mod commands;
mod output;
mod simulate;
mod stats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use phasebc::Error;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 1729;

#[derive(Parser, Debug)]
#[command(name = "phasebc", version, about = "Phase-encoded coherent-state bit commitment toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run commit/open sessions and report acceptance statistics.
    Simulate(simulate::SimulateArgs),
    /// Cheating bounds and the numeric trace norm at (t, M, k).
    Bounds(commands::BoundsArgs),
    /// Smallest (M, k) meeting a security target.
    Plan(commands::PlanArgs),
    /// Build and verify the delayed-choice attack kit.
    Mayers(commands::MayersArgs),
    /// Wigner grid of the code-state mixture as CSV.
    Wigner(commands::WignerArgs),
    /// Zeros of the stellar polynomial of a sector eigenvector.
    Roots(commands::RootsArgs),
}

/// Signal strength: mean photon number or amplitude, not both.
#[derive(Args, Debug, Clone, Copy)]
#[group(required = true, multiple = false)]
pub struct Strength {
    /// Mean photon number E per mode (t = sqrt(E)).
    #[arg(short = 'E', long)]
    pub energy: Option<f64>,
    /// Coherent amplitude t.
    #[arg(short = 't', long)]
    pub amplitude: Option<f64>,
}

impl Strength {
    pub fn amplitude(&self) -> f64 {
        match (self.energy, self.amplitude) {
            (_, Some(t)) => t,
            (Some(e), None) => e.sqrt(),
            (None, None) => unreachable!("clap enforces the group"),
        }
    }

    pub fn energy(&self) -> f64 {
        match (self.energy, self.amplitude) {
            (Some(e), _) => e,
            (None, Some(t)) => t * t,
            (None, None) => unreachable!("clap enforces the group"),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Outcome of a command: success, or a failed security check (exit 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    CheckFailed,
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Parameter(_) | Error::Dimension(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Plan(a) => commands::plan(a),
        Command::Mayers(a) => commands::mayers(a),
        Command::Wigner(a) => commands::wigner(a),
        Command::Roots(a) => commands::roots(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
