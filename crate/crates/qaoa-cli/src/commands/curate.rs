//! `qaoa curate` — run the multi-stage tool-pool filter.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use qaoa_kit::curation::{
    run_curation, CurationConfig, CurationError, TemporalFilterConfig,
    DEFAULT_SEMANTIC_DEDUP_THRESHOLD,
};

use crate::config::{self, ConfigFile, Providers, Resolved, Snapshot};
use crate::{io, CliError};

#[derive(Debug, Args)]
pub struct CurateArgs {
    /// Input tool pool (one tool object per line).
    #[arg(long)]
    pub pool: PathBuf,
    /// Curated pool output (same shape).
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the stage-by-stage reduction report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Temporal keyword configuration file (JSON), replacing the defaults.
    #[arg(long)]
    pub temporal_keywords: Option<PathBuf>,
    /// Cosine similarity above which tools are semantic duplicates.
    #[arg(long, default_value_t = DEFAULT_SEMANTIC_DEDUP_THRESHOLD)]
    pub semantic_threshold: f64,
    /// Skip the semantic dedup stage (no embedder needed).
    #[arg(long)]
    pub skip_semantic: bool,
}

pub fn run(args: &CurateArgs, resolved: &Resolved, file: &ConfigFile) -> Result<(), CliError> {
    let tools = io::load_tool_pool(&args.pool)?;
    let temporal = match &args.temporal_keywords {
        None => TemporalFilterConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::User(format!("bad keyword file {}: {e}", path.display())))?
        }
    };
    if !(0.0..=1.0).contains(&args.semantic_threshold) {
        return Err(CliError::User(format!(
            "--semantic-threshold {} is outside [0,1]",
            args.semantic_threshold
        )));
    }
    let cfg = CurationConfig {
        temporal,
        semantic_threshold: args.semantic_threshold,
        skip_semantic: args.skip_semantic,
    };
    let embedder = if args.skip_semantic {
        None
    } else {
        Some(Providers::build_embedder(resolved, file)?)
    };

    let total_in = tools.len();
    let (curated, report) = run_curation(tools, &cfg, embedder.as_deref())
        .map_err(|e| match e {
            CurationError::EmbedderUnavailable { .. } => CliError::Provider(e.to_string()),
            other => CliError::Internal(other.to_string()),
        })?;
    report.validate().map_err(|e| CliError::Internal(e.to_string()))?;

    io::write_atomic(&args.out, io::tool_pool_lines(&curated)?.as_bytes())?;
    if let Some(report_path) = &args.report {
        io::write_json_atomic(report_path, &report)?;
    }
    config::write_snapshot(
        &args.out,
        &Snapshot {
            command: "curate",
            package_version: env!("CARGO_PKG_VERSION"),
            seed: resolved.seed,
            jobs: resolved.jobs,
            log_level: &resolved.log_level,
            providers: &resolved.providers,
            inputs: json!({"pool": args.pool, "temporal_keywords": args.temporal_keywords}),
            outputs: json!({"out": args.out, "report": args.report}),
            options: json!({
                "semantic_threshold": args.semantic_threshold,
                "skip_semantic": args.skip_semantic,
            }),
        },
    )?;

    for stage in &report.stages {
        println!(
            "{:<18} in={:<6} removed={:<6} out={}",
            stage.stage, stage.tools_in, stage.removed_count, stage.tools_out
        );
    }
    println!("curated {total_in} -> {} tools into {}", curated.len(), args.out.display());
    Ok(())
}
