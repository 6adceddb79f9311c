use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod report;

/// Adaptive stopping for comparing stochastic agents.
///
/// Feed one CSV batch of N evaluations per agent with `compare`; the exit
/// code is 0 while more batches are needed, 1 once every comparison is
/// decided and 2 on error.
#[derive(Parser, Debug)]
#[command(name = "adastop", version)]
struct Cli {
    /// State file [default: $ADASTOP_STATE_DIR/adastop_state.json, or ./adastop_state.json]
    #[arg(long, global = true)]
    state: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest the next batch and run one interim of the test
    Compare(CompareArgs),
    /// Delete the state file
    Reset,
    /// Show the interim counter, boundaries and decisions so far
    Status,
    /// Run a Monte Carlo scenario file and print a CSV report
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Batch CSV: a header of agent labels, then N rows of scores
    pub batch: PathBuf,

    /// N, evaluations per agent per interim (first call only)
    #[arg(long)]
    pub size_group: Option<usize>,

    /// K, maximum number of interims (first call only)
    #[arg(long)]
    pub n_groups: Option<usize>,

    #[arg(long)]
    pub alpha: Option<f64>,

    /// Early-accept level; 0 disables early accept
    #[arg(long)]
    pub beta: Option<f64>,

    /// Permutations per interim when full enumeration is too large
    #[arg(long)]
    pub permutations: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Comparisons to make, e.g. "A:B,A:C" [default: all pairs]
    #[arg(long)]
    pub comparisons: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub scenario: PathBuf,

    /// Override the replication count M of the scenario
    #[arg(long)]
    pub replications: Option<usize>,

    /// Override the base seed of the scenario
    #[arg(long)]
    pub seed: Option<u64>,
}

fn state_path(cli: &Cli) -> PathBuf {
    cli.state.clone().unwrap_or_else(|| {
        let dir = std::env::var_os("ADASTOP_STATE_DIR").map_or_else(|| PathBuf::from("."), PathBuf::from);
        dir.join("adastop_state.json")
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = state_path(&cli);
    let result = match &cli.command {
        Command::Compare(args) => commands::compare(&path, args),
        Command::Reset => commands::reset(&path),
        Command::Status => commands::status(&path),
        Command::Simulate(args) => commands::simulate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
