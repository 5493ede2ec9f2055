//! `qaoa` — operator surface for the tool-use dataset pipeline.
//!
//! Subcommands: curate, assemble, synthesize, evaluate, stats, stratify.
//! Exit codes: 0 success, 1 user error, 2 provider error, 3 internal error.

mod commands;
mod config;
mod io;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

use config::GlobalFlags;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    User(String),
    #[error("{0}")]
    Provider(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Provider(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qaoa",
    version,
    about = "Curate tool pools, assemble candidate lists, synthesize trajectories, and score predictions"
)]
struct Cli {
    /// Config file (TOML); flags override it, environment variables
    /// override both.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for evaluation scoring.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// error, warn, info, debug, or trace.
    #[arg(long, global = true)]
    log_level: Option<String>,
    /// Provider wiring: env, mock[:seed], or script:<chat>[,<judge>].
    #[arg(long, global = true)]
    providers: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a raw tool pool through the multi-stage reduction flow.
    Curate(commands::curate::CurateArgs),
    /// Rewrite instance candidate lists (hybrid20 or gt).
    Assemble(commands::assemble::AssembleArgs),
    /// Generate quality-gated trajectories for one scenario.
    Synthesize(commands::synthesize::SynthesizeArgs),
    /// Score a prediction file against gold conversations.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Dataset statistics.
    Stats(commands::stats::StatsArgs),
    /// Sample a subset with an exact serial:parallel ratio.
    Stratify(commands::stratify::StratifyArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let flags = GlobalFlags {
        config: cli.config.clone(),
        seed: cli.seed,
        jobs: cli.jobs,
        log_level: cli.log_level.clone(),
        providers: cli.providers.clone(),
    };
    let (resolved, file) = config::resolve(&flags)?;

    env_logger::Builder::new()
        .parse_filters(&resolved.log_level)
        .format_timestamp_millis()
        .try_init()
        .ok();

    match &cli.command {
        Command::Curate(args) => commands::curate::run(args, &resolved, &file),
        Command::Assemble(args) => commands::assemble::run(args, &resolved, &file),
        Command::Synthesize(args) => commands::synthesize::run(args, &resolved, &file),
        Command::Evaluate(args) => commands::evaluate::run(args, &resolved, &file),
        Command::Stats(args) => commands::stats::run(args, &resolved, &file),
        Command::Stratify(args) => commands::stratify::run(args, &resolved, &file),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
