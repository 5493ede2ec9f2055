//! `qaoa evaluate` — score a prediction file against gold conversations and
//! emit the metric report plus per-instance diagnostics.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use qaoa_kit::matching::DEFAULT_SEMANTIC_THRESHOLD;
use qaoa_kit::metrics::{bucket_metrics_parallel, GranularityReport, MetricReport, PredictionSet};

use crate::config::{self, ConfigFile, Resolved, Snapshot};
use crate::{io, CliError};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Gold conversations, wire format.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predictions: one {"id", "turn", "response"} record per line.
    #[arg(long)]
    pub pred: PathBuf,
    /// Metric report output (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-instance alignment diagnostics (one record per line).
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// ROUGE-L score at or above which a string argument matches.
    #[arg(long, default_value_t = DEFAULT_SEMANTIC_THRESHOLD)]
    pub semantic_threshold: f64,
    /// Label for the candidate setting being evaluated.
    #[arg(long, default_value = "hybrid20")]
    pub setting: String,
}

pub fn run(args: &EvaluateArgs, resolved: &Resolved, _file: &ConfigFile) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.semantic_threshold) {
        return Err(CliError::User(format!(
            "--semantic-threshold {} is outside [0,1]",
            args.semantic_threshold
        )));
    }
    let gold = io::load_conversations(&args.gold)?;
    let predictions = PredictionSet::from_reader(io::open_input(&args.pred)?)
        .map_err(|e| CliError::User(format!("{}: {e}", args.pred.display())))?;

    let evaluation = bucket_metrics_parallel(
        &gold,
        &predictions,
        args.semantic_threshold,
        &args.setting,
        resolved.jobs,
    )
    .map_err(|e| CliError::User(e.to_string()))?;

    io::write_json_atomic(&args.out, &evaluation.report)?;
    if let Some(diag_path) = &args.diagnostics {
        let mut lines = String::new();
        for diag in &evaluation.diagnostics {
            lines.push_str(
                &serde_json::to_string(diag).map_err(|e| CliError::Internal(e.to_string()))?,
            );
            lines.push('\n');
        }
        io::write_atomic(diag_path, lines.as_bytes())?;
    }
    config::write_snapshot(
        &args.out,
        &Snapshot {
            command: "evaluate",
            package_version: env!("CARGO_PKG_VERSION"),
            seed: resolved.seed,
            jobs: resolved.jobs,
            log_level: &resolved.log_level,
            providers: &resolved.providers,
            inputs: json!({"gold": args.gold, "pred": args.pred}),
            outputs: json!({"out": args.out, "diagnostics": args.diagnostics}),
            options: json!({
                "semantic_threshold": args.semantic_threshold,
                "setting": args.setting,
            }),
        },
    )?;

    print!("{}", render_table(&evaluation.report));
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.1}"),
        None => "-".to_string(),
    }
}

fn render_rows(out: &mut String, report: &GranularityReport) {
    for (name, bucket) in &report.buckets {
        out.push_str(&format!(
            "  {:<9} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
            name,
            cell(bucket.sp),
            cell(bucket.fp),
            cell(bucket.spa),
            cell(bucket.fpa),
            bucket.n
        ));
    }
}

/// Plain-text table: SP / FP / SPA / FPA per structure bucket.
pub fn render_table(report: &MetricReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "setting: {}   semantic threshold: {:.2}\n",
        report.setting, report.semantic_threshold
    ));
    out.push_str(&format!(
        "  {:<9} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
        "bucket", "SP", "FP", "SPA", "FPA", "N"
    ));
    out.push_str("turn level (hops)\n");
    render_rows(&mut out, &report.turn_level);
    out.push_str("conversation level (turns)\n");
    render_rows(&mut out, &report.conversation_level);
    if !report.missing_predictions.is_empty() {
        out.push_str(&format!(
            "missing prediction records: {}\n",
            report.missing_predictions.len()
        ));
    }
    if !report.skipped.is_empty() {
        out.push_str(&format!("skipped call-free instances: {}\n", report.skipped.len()));
    }
    out
}
