//! `qaoa stratify` — sample the largest subset hitting a serial:parallel
//! ratio exactly.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use qaoa_kit::stats::stratify_by_ratio;

use crate::config::{self, ConfigFile, Resolved, Snapshot};
use crate::{io, CliError};

#[derive(Debug, Args)]
pub struct StratifyArgs {
    #[arg(long, name = "in")]
    pub input: PathBuf,
    /// Target serial:parallel ratio, e.g. 1:4.
    #[arg(long)]
    pub ratio: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_ratio(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::User(format!("bad ratio '{spec}': expected S:P with positive integers"));
    let (s, p) = spec.split_once(':').ok_or_else(bad)?;
    let serial: usize = s.trim().parse().map_err(|_| bad())?;
    let parallel: usize = p.trim().parse().map_err(|_| bad())?;
    if serial == 0 || parallel == 0 {
        return Err(bad());
    }
    Ok((serial, parallel))
}

pub fn run(args: &StratifyArgs, resolved: &Resolved, _file: &ConfigFile) -> Result<(), CliError> {
    let (serial, parallel) = parse_ratio(&args.ratio)?;
    let conversations = io::load_conversations(&args.input)?;
    let subset = stratify_by_ratio(&conversations, serial, parallel, resolved.seed)
        .map_err(|e| CliError::User(e.to_string()))?;
    io::write_atomic(&args.out, io::conversation_lines(&subset)?.as_bytes())?;
    config::write_snapshot(
        &args.out,
        &Snapshot {
            command: "stratify",
            package_version: env!("CARGO_PKG_VERSION"),
            seed: resolved.seed,
            jobs: resolved.jobs,
            log_level: &resolved.log_level,
            providers: &resolved.providers,
            inputs: json!({"in": args.input}),
            outputs: json!({"out": args.out}),
            options: json!({"ratio": args.ratio}),
        },
    )?;
    println!(
        "stratified {} of {} conversations at {}:{} into {}",
        subset.len(),
        conversations.len(),
        serial,
        parallel,
        args.out.display()
    );
    Ok(())
}
