//! `qaoa assemble` — rewrite each instance's candidate tool list in the
//! hybrid-20 or ground-truth setting.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use qaoa_kit::candidates::{assemble_gt, assemble_hybrid, CandidateError};
use qaoa_kit::model::ToolSpec;
use qaoa_kit::providers::CachingEmbedder;

use crate::config::{self, ConfigFile, Providers, Resolved, Snapshot};
use crate::{io, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Hybrid20,
    Gt,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Conversations whose tools field is rewritten.
    #[arg(long, name = "in")]
    pub input: PathBuf,
    /// Curated pool the negatives are drawn from (hybrid mode).
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Resolves a gold tool name: the pool wins, the instance's existing
/// candidate list fills gaps.
fn resolve_tool<'a>(
    name: &str,
    pool: &'a [ToolSpec],
    existing: &'a [ToolSpec],
) -> Option<&'a ToolSpec> {
    pool.iter().find(|t| t.name == name).or_else(|| existing.iter().find(|t| t.name == name))
}

pub fn run(args: &AssembleArgs, resolved: &Resolved, file: &ConfigFile) -> Result<(), CliError> {
    let pool = io::load_tool_pool(&args.pool)?;
    let mut conversations = io::load_conversations(&args.input)?;
    let embedder = match args.mode {
        Mode::Hybrid20 => Some(CachingEmbedder::new(Providers::build_embedder(resolved, file)?)),
        Mode::Gt => None,
    };

    for (index, conv) in conversations.iter_mut().enumerate() {
        let gt_names = conv.ground_truth_tool_names();
        if gt_names.is_empty() {
            return Err(CliError::User(format!(
                "instance '{}' calls no tools; cannot assemble candidates",
                conv.id
            )));
        }
        let gt_tools: Vec<ToolSpec> = gt_names
            .iter()
            .map(|n| {
                resolve_tool(n, &pool, &conv.candidates).cloned().ok_or_else(|| {
                    CliError::User(format!(
                        "instance '{}': called tool '{n}' is neither in the pool nor in the \
                         instance's tools",
                        conv.id
                    ))
                })
            })
            .collect::<Result<_, _>>()?;

        conv.candidates = match args.mode {
            Mode::Gt => {
                let list = assemble_gt(&gt_tools).map_err(candidate_error)?;
                list.presented_tools()
            }
            Mode::Hybrid20 => {
                let seed = resolved.seed.wrapping_add(index as u64);
                let embedder = embedder.as_ref().expect("hybrid embedder");
                let list = assemble_hybrid(&gt_tools, &pool, embedder, seed)
                    .map_err(candidate_error)?;
                list.presented_tools()
            }
        };
    }

    io::write_atomic(&args.out, io::conversation_lines(&conversations)?.as_bytes())?;
    config::write_snapshot(
        &args.out,
        &Snapshot {
            command: "assemble",
            package_version: env!("CARGO_PKG_VERSION"),
            seed: resolved.seed,
            jobs: resolved.jobs,
            log_level: &resolved.log_level,
            providers: &resolved.providers,
            inputs: json!({"in": args.input, "pool": args.pool}),
            outputs: json!({"out": args.out}),
            options: json!({"mode": format!("{:?}", args.mode).to_lowercase()}),
        },
    )?;
    println!(
        "assembled {} instances ({:?}) into {}",
        conversations.len(),
        args.mode,
        args.out.display()
    );
    Ok(())
}

fn candidate_error(e: CandidateError) -> CliError {
    match e {
        CandidateError::Embedding(inner) => CliError::Provider(inner.to_string()),
        other => CliError::User(other.to_string()),
    }
}
