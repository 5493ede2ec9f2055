//! `qaoa synthesize` — generate gated trajectories for one scenario.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use qaoa_kit::providers::CachingEmbedder;
use qaoa_kit::synthesis::{
    synthesize_batch, Scenario, SynthesisContext, SynthesisError, UsageCounter,
};

use crate::config::{self, ConfigFile, Providers, Resolved, Snapshot};
use crate::{io, CliError};

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Scenario: sh, mh-serial, mh-parallel, or mt.
    #[arg(long)]
    pub scenario: String,
    /// Instances to attempt.
    #[arg(long)]
    pub count: usize,
    /// Curated tool pool.
    #[arg(long)]
    pub pool: PathBuf,
    /// Accepted instances, wire format.
    #[arg(long)]
    pub out: PathBuf,
    /// Rejection log (one exclusion report per line).
    #[arg(long)]
    pub rejects: Option<PathBuf>,
}

pub fn run(args: &SynthesizeArgs, resolved: &Resolved, file: &ConfigFile) -> Result<(), CliError> {
    let scenario: Scenario =
        args.scenario.parse().map_err(|e: String| CliError::User(e))?;
    let pool = io::load_tool_pool(&args.pool)?;
    let providers = Providers::build(resolved, file)?;
    let embedder = CachingEmbedder::new(providers.embedder);
    let ctx = SynthesisContext::new(
        providers.chat.as_ref(),
        providers.judge.as_ref(),
        &embedder,
        &pool,
    );
    let usage = UsageCounter::new();

    let batch = synthesize_batch(scenario, args.count, resolved.seed, &ctx, &usage)
        .map_err(synthesis_error)?;

    let instances: Vec<_> = batch.accepted.iter().map(|a| a.instance.clone()).collect();
    io::write_atomic(&args.out, io::conversation_lines(&instances)?.as_bytes())?;

    if let Some(rejects_path) = &args.rejects {
        let mut lines = String::new();
        for report in &batch.excluded {
            lines.push_str(
                &serde_json::to_string(report)
                    .map_err(|e| CliError::Internal(e.to_string()))?,
            );
            lines.push('\n');
        }
        io::write_atomic(rejects_path, lines.as_bytes())?;
    }

    config::write_snapshot(
        &args.out,
        &Snapshot {
            command: "synthesize",
            package_version: env!("CARGO_PKG_VERSION"),
            seed: resolved.seed,
            jobs: resolved.jobs,
            log_level: &resolved.log_level,
            providers: &resolved.providers,
            inputs: json!({"pool": args.pool}),
            outputs: json!({"out": args.out, "rejects": args.rejects}),
            options: json!({"scenario": args.scenario, "count": args.count}),
        },
    )?;

    println!(
        "accepted {} of {} {} tasks into {} ({} excluded)",
        batch.accepted.len(),
        args.count,
        scenario.slug(),
        args.out.display(),
        batch.excluded.len()
    );
    Ok(())
}

fn synthesis_error(e: SynthesisError) -> CliError {
    match e {
        SynthesisError::Provider(inner) => CliError::Provider(inner.to_string()),
        SynthesisError::JudgeError { .. } => CliError::Provider(e.to_string()),
        SynthesisError::PoolTooSmall { .. }
        | SynthesisError::NoDomainWithEnoughTools { .. }
        | SynthesisError::InvalidTask { .. } => CliError::User(e.to_string()),
        other => CliError::Internal(other.to_string()),
    }
}
