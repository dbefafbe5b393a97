//! Reproducible experiment runner: parse a declarative config, dispatch to
//! the library, emit CSV artifacts plus a human-readable summary.
//!
//! Exit codes: 0 = complete/PASS, 1 = usage/config/runtime error,
//! 2 = a FAIL-type report (validation failure, calibration failure,
//! certification failure, threshold violation).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "chainlab", version, about = "Damped Hamiltonian chain laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override [run] seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override [run] out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override [run] threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override [run] wall_clock_minutes (0 = unlimited).
    #[arg(long)]
    wall_clock: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check potential assumptions (non-degeneracy, convexity class).
    Validate(Common),
    /// Deterministic damped trajectory with the energy ledger.
    Simulate(Common),
    /// Langevin (Euler-Maruyama) trajectories.
    SimulateSde(Common),
    /// Calibrate the rotor Lyapunov coefficient ladder.
    Calibrate(Common),
    /// Fresh-sample verification of the calibrated dissipation bound.
    VerifyLyapunov(Common),
    /// Estimate envelopes and build the strict-Lyapunov tables.
    MatrosovBuild(Common),
    /// Certify strictness of stored tables on fresh samples.
    MatrosovCertify(Common),
    /// Locate oscillator equilibria inside the certified box.
    Equilibria(Common),
    /// Order-of-vanishing statistics for oscillator chains.
    OrderStats(Common),
    /// Energy-dissipation scaling scan for rotator chains.
    DecayScan(Common),
    /// Monte-Carlo check of the stochastic generator.
    GeneratorCheck(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Validate(c) => ("validate", c),
        Command::Simulate(c) => ("simulate", c),
        Command::SimulateSde(c) => ("simulate-sde", c),
        Command::Calibrate(c) => ("calibrate", c),
        Command::VerifyLyapunov(c) => ("verify-lyapunov", c),
        Command::MatrosovBuild(c) => ("matrosov-build", c),
        Command::MatrosovCertify(c) => ("matrosov-certify", c),
        Command::Equilibria(c) => ("equilibria", c),
        Command::OrderStats(c) => ("order-stats", c),
        Command::DecayScan(c) => ("decay-scan", c),
        Command::GeneratorCheck(c) => ("generator-check", c),
    };
    match commands::run(name, common) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("chainlab: {e:#}");
            ExitCode::from(1)
        }
    }
}
