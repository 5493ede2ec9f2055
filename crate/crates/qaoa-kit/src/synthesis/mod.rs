//! Synthetic trajectory generation: sample a tool subset, drive the
//! generator provider for the scenario, validate the structural
//! constraints, gate through the rubric judge, and retry on failure.
//! Accepted drafts are assembled into wire-ready instances with a Hybrid-20
//! candidate list and the shipped system prompt.

pub mod anchors;
mod generate;
pub mod prompts;
mod rubric;
mod task;

pub use anchors::{check_anchor_linkage, extract_anchors, LinkageReport, TurnLinkage};
pub use generate::{
    generate_multi_hop, generate_multi_turn, generate_single_hop, validate_arguments,
    AnchorRecord, TrajectoryDraft,
};
pub use rubric::{decide, quality_gate, GateDecision, RubricScores, ACCEPT_SCORE, MIN_DIMENSION_SCORE};
pub use task::{
    sample_tool_subset, GenerationTask, Scenario, UsageCounter, DEFAULT_MAX_RETRIES,
    MULTI_HOP_MAX, MULTI_HOP_MIN, MULTI_TURN_SUBSET, TURN_CHOICES,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::candidates::{assemble_hybrid, CandidateError, CandidateList};
use crate::model::{ModelError, QaoaConversation, ToolSpec};
use crate::providers::{ChatProvider, EmbeddingProvider, ProviderError};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("schema violation: {detail}")]
    SchemaViolation { detail: String },
    #[error("dependency violation: {detail}")]
    DependencyViolation { detail: String },
    #[error("anchor violation: {detail}")]
    AnchorViolation { detail: String },
    #[error("invalid generation: {detail}")]
    InvalidGeneration { detail: String },
    #[error("judge failure: {detail}")]
    JudgeError { detail: String },
    #[error("anchor linkage needs at least two turns, draft has {turns}")]
    NotMultiTurn { turns: usize },
    #[error("pool too small: need {needed}, have {available}")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("no domain holds {needed} tools for a multi-hop subset")]
    NoDomainWithEnoughTools { needed: usize },
    #[error("invalid task: {detail}")]
    InvalidTask { detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Candidate(#[from] CandidateError),
}

impl SynthesisError {
    /// Failures that consume a retry attempt rather than aborting the task.
    fn is_draft_failure(&self) -> bool {
        matches!(
            self,
            SynthesisError::SchemaViolation { .. }
                | SynthesisError::DependencyViolation { .. }
                | SynthesisError::AnchorViolation { .. }
                | SynthesisError::InvalidGeneration { .. }
        )
    }
}

/// Providers and pool shared across synthesis tasks.
pub struct SynthesisContext<'a> {
    pub chat: &'a dyn ChatProvider,
    pub judge: &'a dyn ChatProvider,
    pub embedder: &'a dyn EmbeddingProvider,
    /// Curated pool the Hybrid-20 negatives are drawn from.
    pub pool: &'a [ToolSpec],
    /// System prompt injected into accepted instances.
    pub system_prompt: String,
}

impl<'a> SynthesisContext<'a> {
    pub fn new(
        chat: &'a dyn ChatProvider,
        judge: &'a dyn ChatProvider,
        embedder: &'a dyn EmbeddingProvider,
        pool: &'a [ToolSpec],
    ) -> Self {
        SynthesisContext {
            chat,
            judge,
            embedder,
            pool,
            system_prompt: prompts::INSTANCE_SYSTEM_PROMPT.to_string(),
        }
    }
}

/// A draft that survived validation and the quality gate, assembled into a
/// final wire-ready instance.
#[derive(Debug)]
pub struct AcceptedInstance {
    pub instance: QaoaConversation,
    pub draft: TrajectoryDraft,
    pub scores: RubricScores,
    pub candidates: CandidateList,
    pub attempts: usize,
}

/// Terminal failure of one task: the target tools are excluded.
#[derive(Debug, Clone, Serialize)]
pub struct ExclusionReport {
    pub task_id: String,
    pub scenario: Scenario,
    /// Names of the tools the task was generating for.
    pub tools: Vec<String>,
    pub attempts: usize,
    /// One entry per failed attempt: what went wrong.
    pub failures: Vec<String>,
    /// Rubric scores for attempts that reached the gate.
    pub scores: Vec<Option<RubricScores>>,
}

/// Outcome of one task under the retry loop.
#[derive(Debug)]
pub enum SynthesisOutcome {
    Accepted(Box<AcceptedInstance>),
    Excluded(ExclusionReport),
}

fn generate_for(
    task: &GenerationTask,
    chat: &dyn ChatProvider,
) -> Result<TrajectoryDraft, SynthesisError> {
    match task.scenario {
        Scenario::SingleHop => generate_single_hop(task, chat),
        Scenario::MultiHopSerial | Scenario::MultiHopParallel => generate_multi_hop(task, chat),
        Scenario::MultiTurn => generate_multi_turn(task, chat),
    }
}

/// Runs generate → validate → gate for one task, regenerating on rejection
/// up to `max_retries` attempts, then excluding the task's tools. Accepted
/// drafts get a Hybrid-20 candidate list (seeded by the task seed) and the
/// system prompt injected.
pub fn synthesize_with_retry(
    task: &GenerationTask,
    ctx: &SynthesisContext<'_>,
) -> Result<SynthesisOutcome, SynthesisError> {
    task.validate()?;
    let mut failures = Vec::new();
    let mut scores_log = Vec::new();
    let attempts = task.max_retries.max(1);

    for attempt in 1..=attempts {
        let draft = match generate_for(task, ctx.chat) {
            Ok(draft) => draft,
            Err(e) if e.is_draft_failure() => {
                log::debug!("task {}: attempt {attempt} failed: {e}", task.id);
                failures.push(e.to_string());
                scores_log.push(None);
                continue;
            }
            Err(e) => return Err(e),
        };
        let decision = quality_gate(&draft, task.scenario, ctx.judge)?;
        if !decision.accepted {
            let reason = decision.reason.unwrap_or_else(|| "rejected".to_string());
            log::debug!("task {}: attempt {attempt} rejected: {reason}", task.id);
            failures.push(format!("gate rejection: {reason}"));
            scores_log.push(Some(decision.scores));
            continue;
        }

        let gt_names = draft.conversation.ground_truth_tool_names();
        let gt_tools: Vec<ToolSpec> = gt_names
            .iter()
            .filter_map(|n| task.tools.iter().find(|t| &t.name == n).cloned())
            .collect();
        let candidates = assemble_hybrid(&gt_tools, ctx.pool, ctx.embedder, task.rng_seed)?;

        let mut instance = draft.conversation.clone();
        instance.system_prompt = ctx.system_prompt.clone();
        instance.candidates = candidates.presented_tools();
        instance.validate()?;

        return Ok(SynthesisOutcome::Accepted(Box::new(AcceptedInstance {
            instance,
            draft,
            scores: decision.scores,
            candidates,
            attempts: attempt,
        })));
    }

    Ok(SynthesisOutcome::Excluded(ExclusionReport {
        task_id: task.id.clone(),
        scenario: task.scenario,
        tools: task.tools.iter().map(|t| t.name.clone()).collect(),
        attempts,
        failures,
        scores: scores_log,
    }))
}

/// Result of a batch run.
#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub accepted: Vec<AcceptedInstance>,
    pub excluded: Vec<ExclusionReport>,
}

impl BatchOutcome {
    fn empty() -> Self {
        BatchOutcome { accepted: Vec::new(), excluded: Vec::new() }
    }
}

/// Synthesizes `count` instances of one scenario. Tasks run sequentially:
/// per-task seeds, subset draws, and turn counts all derive from the master
/// seed, so a run is bit-reproducible with deterministic providers.
pub fn synthesize_batch(
    scenario: Scenario,
    count: usize,
    seed: u64,
    ctx: &SynthesisContext<'_>,
    usage: &UsageCounter,
) -> Result<BatchOutcome, SynthesisError> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut outcome = BatchOutcome::empty();
    for index in 0..count {
        let task_seed = master.gen::<u64>();
        let turns = TURN_CHOICES[master.gen_range(0..TURN_CHOICES.len())];
        let tools = sample_tool_subset(ctx.pool, scenario, task_seed, usage)?;
        let id = format!("{}-{seed:08x}-{index:04}", scenario.slug());
        let task = GenerationTask::new(id, scenario, tools, task_seed).with_turns(turns);
        match synthesize_with_retry(&task, ctx)? {
            SynthesisOutcome::Accepted(accepted) => outcome.accepted.push(*accepted),
            SynthesisOutcome::Excluded(report) => outcome.excluded.push(report),
        }
    }
    Ok(outcome)
}
