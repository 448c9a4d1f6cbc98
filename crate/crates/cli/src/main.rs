//! `symplab` command-line driver.
//!
//! Exit codes: 0 when every executed check passes, 1 on a numerical failure
//! or a failed check, 2 on invalid configuration or input.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, CliResult, GenFlowArgs, LoopOpsArgs, RoundtripArgs, SolveKwArgs, VerifyAllArgs};

#[derive(Parser)]
#[command(name = "symplab", version, about = "Gradient flows of the Rabinowitz action on the symplectized circle")]
struct Cli {
    /// Seed for every randomly generated input.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scalar shift equation for a Gaussian-sum forcing.
    SolveKw(SolveKwArgs),
    /// Solve a truncated flow line between two perturbed critical loops.
    GenFlow(GenFlowArgs),
    /// Compose the two maps between the flow formulations and compare.
    Roundtrip(RoundtripArgs),
    /// Apply a loop-space operation and optionally evaluate its laws.
    LoopOps(LoopOpsArgs),
    /// Run the acceptance suite and print a JSON summary.
    VerifyAll(VerifyAllArgs),
    /// Run one experiment described by a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::SolveKw(a) => commands::solve_kw(&a, cli.seed),
        Command::GenFlow(a) => commands::gen_flow(&a),
        Command::Roundtrip(a) => commands::roundtrip(&a),
        Command::LoopOps(a) => commands::loop_ops(&a, cli.seed),
        Command::VerifyAll(a) => commands::verify_all(&a),
        Command::Run { config } => config::run(&config),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("symplab: a check failed");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("symplab: numerical failure: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Invalid(msg)) => {
            eprintln!("symplab: {msg}");
            ExitCode::from(2)
        }
    }
}
