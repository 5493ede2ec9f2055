//! `qaoa stats` — dataset statistics.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use qaoa_kit::stats::compute_stats;

use crate::config::{self, ConfigFile, Resolved, Snapshot};
use crate::{io, CliError};

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, name = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &StatsArgs, resolved: &Resolved, _file: &ConfigFile) -> Result<(), CliError> {
    let conversations = io::load_conversations(&args.input)?;
    let stats = compute_stats(&conversations);
    io::write_json_atomic(&args.out, &stats)?;
    config::write_snapshot(
        &args.out,
        &Snapshot {
            command: "stats",
            package_version: env!("CARGO_PKG_VERSION"),
            seed: resolved.seed,
            jobs: resolved.jobs,
            log_level: &resolved.log_level,
            providers: &resolved.providers,
            inputs: json!({"in": args.input}),
            outputs: json!({"out": args.out}),
            options: json!({}),
        },
    )?;

    println!(
        "{} conversations, {} turns, {} calls",
        stats.conversations, stats.turns, stats.calls
    );
    println!(
        "multi-turn {:.1}%  multi-hop {:.1}%",
        stats.multi_turn_proportion * 100.0,
        stats.multi_hop_proportion * 100.0
    );
    println!(
        "multi-hop turn routing: {} serial, {} parallel, {} mixed",
        stats.serial_turns, stats.parallel_turns, stats.mixed_turns
    );
    Ok(())
}
