//! `qdwalk`: config-driven batch experiments on top of `qdot-walk`.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Context;
use error::CliResult;
use output::OutDir;

#[derive(Parser)]
#[command(name = "qdwalk", version, about = "Quantum walks, staged gate synthesis and double-well dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for randomized inputs; overrides the config's `seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Also run the independent cross-check for this subcommand
    #[arg(long)]
    oracle: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a coined walk on a graph and write the node distribution
    Walk(Common),
    /// Split a unitary into stages of disjoint pair rotations
    Decompose(Common),
    /// Check the register-shuttling protocol against logical stages
    ConveyorVerify(Common),
    /// Run a barrier timeline and write the Bloch trajectory
    Tdse(Common),
    /// Find hold times for target transfers
    Calibrate(Common),
}

fn context(common: &Common) -> CliResult<Context> {
    Ok(Context {
        out: OutDir::create(&common.out)?,
        seed: common.seed,
        oracle: common.oracle,
    })
}

fn run(command: Command) -> CliResult<()> {
    fn with<T: serde::de::DeserializeOwned + config::Resolve>(
        common: &Common,
        f: impl FnOnce(&T, &Context) -> CliResult<()>,
    ) -> CliResult<()> {
        let cfg: T = config::load(Path::new(&common.config))?;
        f(&cfg, &context(common)?)
    }
    match command {
        Command::Walk(c) => with(&c, commands::cmd_walk),
        Command::Decompose(c) => with(&c, commands::cmd_decompose),
        Command::ConveyorVerify(c) => with(&c, commands::cmd_conveyor_verify),
        Command::Tdse(c) => with(&c, commands::cmd_tdse),
        Command::Calibrate(c) => with(&c, commands::cmd_calibrate),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
