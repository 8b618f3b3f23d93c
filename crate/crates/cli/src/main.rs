//! `triage` — batch bug-triage pipeline over tracker exports.
//!
//! Subcommands: `ingest`, `topics`, `train`, `assign`, `evaluate`. One TOML
//! config file drives everything; commands exchange versioned JSON artifacts
//! through the configured output directory and print machine-readable JSON
//! to stdout.
//!
//! Exit codes: 0 success, 2 I/O or schema problem, 3 empty or degenerate
//! data, 4 internal invariant violation.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "triage", version, about = "Topic-aware, load-normalizing bug triage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML); relative paths resolve against it.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, validate, filter, and chronologically order the input export.
    Ingest(CommonArgs),
    /// Score topic counts by coherence and pick one.
    Topics(CommonArgs),
    /// Fit the topic model and the developer score matrix.
    Train(CommonArgs),
    /// Label new bug reports and assign them in load-normalized batches.
    Assign {
        #[command(flatten)]
        common: CommonArgs,
        /// File of incoming bug reports (same schema as the input export).
        #[arg(long)]
        new_bugs: PathBuf,
    },
    /// Replay the pipeline over nine rolling chronological folds.
    Evaluate(CommonArgs),
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.command {
        Command::Ingest(args) => {
            let config = RunConfig::load(&args.config, args.seed)?;
            commands::cmd_ingest(&config)
        }
        Command::Topics(args) => {
            let config = RunConfig::load(&args.config, args.seed)?;
            commands::cmd_topics(&config)
        }
        Command::Train(args) => {
            let config = RunConfig::load(&args.config, args.seed)?;
            commands::cmd_train(&config)
        }
        Command::Assign { common, new_bugs } => {
            let config = RunConfig::load(&common.config, common.seed)?;
            commands::cmd_assign(&config, &new_bugs)
        }
        Command::Evaluate(args) => {
            let config = RunConfig::load(&args.config, args.seed)?;
            commands::cmd_evaluate(&config)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(body) => {
            println!("{}", serde_json::to_string_pretty(&body).expect("valid json"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
