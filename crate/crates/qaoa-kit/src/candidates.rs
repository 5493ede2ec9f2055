//! Per-instance candidate tool lists.
//!
//! The Hybrid-20 setting presents exactly 20 candidates: the ground-truth
//! anchors, embedding-similar hard negatives, and 5 random easy negatives,
//! shuffled so anchors are not positionally identifiable. The GT setting
//! presents only the ground-truth tools.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ToolSpec;
use crate::providers::{cosine, EmbeddingProvider, ProviderError};

/// Total candidates in the hybrid setting.
pub const HYBRID_TOTAL: usize = 20;
/// Random easy negatives appended per instance.
pub const EASY_NEGATIVES: usize = 5;
/// Largest anchor set the hybrid arithmetic allows: 20 − 5 easy negatives.
pub const MAX_ANCHORS: usize = HYBRID_TOTAL - EASY_NEGATIVES;

#[derive(Debug, Error)]
pub enum CandidateError {
    #[error("ground-truth tool list is empty")]
    EmptyGroundTruth,
    #[error("{anchors} anchors exceed the maximum of {MAX_ANCHORS}")]
    TooManyAnchors { anchors: usize },
    #[error("pool has {available} non-anchor tools but {needed} are needed")]
    PoolTooSmall { available: usize, needed: usize },
    #[error("embedding failure: {0}")]
    Embedding(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateMode {
    Hybrid20,
    Gt,
}

/// A per-instance candidate list: the anchor/negative partition plus the
/// presentation order. Only the presented tool list survives serialization
/// into the wire format; the partition is assembly-side metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateList {
    pub mode: CandidateMode,
    pub anchors: Vec<ToolSpec>,
    pub hard_negatives: Vec<ToolSpec>,
    pub easy_negatives: Vec<ToolSpec>,
    pub seed: u64,
    /// Tool names in presentation order.
    pub presentation: Vec<String>,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.anchors.len() + self.hard_negatives.len() + self.easy_negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The candidate tools in presentation order — what goes on the wire.
    pub fn presented_tools(&self) -> Vec<ToolSpec> {
        let all: Vec<&ToolSpec> = self
            .anchors
            .iter()
            .chain(&self.hard_negatives)
            .chain(&self.easy_negatives)
            .collect();
        self.presentation
            .iter()
            .filter_map(|name| all.iter().find(|t| &t.name == name).map(|t| (*t).clone()))
            .collect()
    }

    /// Structural invariants for the list's mode.
    pub fn validate(&self) -> Result<(), CandidateError> {
        let mut names: Vec<&str> = self
            .anchors
            .iter()
            .chain(&self.hard_negatives)
            .chain(&self.easy_negatives)
            .map(|t| t.name.as_str())
            .collect();
        let total = names.len();
        names.sort_unstable();
        names.dedup();
        if names.len() != total {
            return Err(CandidateError::TooManyAnchors { anchors: self.anchors.len() });
        }
        match self.mode {
            CandidateMode::Hybrid20 => {
                if total != HYBRID_TOTAL
                    || self.easy_negatives.len() != EASY_NEGATIVES
                    || self.presentation.len() != HYBRID_TOTAL
                {
                    return Err(CandidateError::PoolTooSmall {
                        available: total,
                        needed: HYBRID_TOTAL,
                    });
                }
            }
            CandidateMode::Gt => {
                if !self.hard_negatives.is_empty() || !self.easy_negatives.is_empty() {
                    return Err(CandidateError::PoolTooSmall { available: total, needed: 0 });
                }
            }
        }
        Ok(())
    }
}

fn dedup_by_name(tools: &[ToolSpec]) -> Vec<ToolSpec> {
    let mut out: Vec<ToolSpec> = Vec::new();
    for t in tools {
        if !out.iter().any(|o| o.name == t.name) {
            out.push(t.clone());
        }
    }
    out
}

/// Assembles a Hybrid-20 list.
///
/// Hard negatives are the non-anchor pool tools most similar (by cosine over
/// `name: description` embeddings) to the centroid of the anchor embeddings,
/// ties broken by name, and do not depend on the seed. Easy negatives are
/// drawn uniformly without replacement from what remains; the 20 candidates
/// are then shuffled. Both draws consume `rng_seed`, so a different seed
/// changes only easy negatives and presentation order.
pub fn assemble_hybrid(
    gt_tools: &[ToolSpec],
    pool: &[ToolSpec],
    embedder: &dyn EmbeddingProvider,
    rng_seed: u64,
) -> Result<CandidateList, CandidateError> {
    let anchors = dedup_by_name(gt_tools);
    if anchors.is_empty() {
        return Err(CandidateError::EmptyGroundTruth);
    }
    if anchors.len() > MAX_ANCHORS {
        return Err(CandidateError::TooManyAnchors { anchors: anchors.len() });
    }
    let hard_count = MAX_ANCHORS - anchors.len();

    let available: Vec<ToolSpec> = dedup_by_name(pool)
        .into_iter()
        .filter(|t| !anchors.iter().any(|a| a.name == t.name))
        .collect();
    let needed = hard_count + EASY_NEGATIVES;
    if available.len() < needed {
        return Err(CandidateError::PoolTooSmall { available: available.len(), needed });
    }

    // One embedding call covers anchors and pool; the centroid of the anchor
    // vectors is the retrieval query.
    let texts: Vec<String> = anchors
        .iter()
        .chain(&available)
        .map(ToolSpec::embedding_text)
        .collect();
    let batch = embedder.embed(&texts)?;
    let (anchor_vecs, pool_vecs) = batch.vectors.split_at(anchors.len());
    let dim = batch.dimension;
    let mut centroid = vec![0.0f64; dim];
    for v in anchor_vecs {
        for (c, x) in centroid.iter_mut().zip(v) {
            *c += x;
        }
    }
    for c in &mut centroid {
        *c /= anchor_vecs.len() as f64;
    }

    let mut scored: Vec<(f64, &ToolSpec)> = available
        .iter()
        .zip(pool_vecs)
        .map(|(t, v)| (cosine(v, &centroid).unwrap_or(f64::NEG_INFINITY), t))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.name.cmp(&b.1.name)));
    let hard_negatives: Vec<ToolSpec> =
        scored.iter().take(hard_count).map(|(_, t)| (*t).clone()).collect();

    let mut remaining: Vec<&ToolSpec> = scored[hard_count..].iter().map(|(_, t)| *t).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    remaining.shuffle(&mut rng);
    let easy_negatives: Vec<ToolSpec> =
        remaining.iter().take(EASY_NEGATIVES).map(|t| (*t).clone()).collect();

    let mut presentation: Vec<String> = anchors
        .iter()
        .chain(&hard_negatives)
        .chain(&easy_negatives)
        .map(|t| t.name.clone())
        .collect();
    presentation.shuffle(&mut rng);

    let list = CandidateList {
        mode: CandidateMode::Hybrid20,
        anchors,
        hard_negatives,
        easy_negatives,
        seed: rng_seed,
        presentation,
    };
    list.validate()?;
    Ok(list)
}

/// Assembles a GT list: the ground-truth tools in input order, duplicates
/// collapsed by name, no negatives.
pub fn assemble_gt(gt_tools: &[ToolSpec]) -> Result<CandidateList, CandidateError> {
    let anchors = dedup_by_name(gt_tools);
    if anchors.is_empty() {
        return Err(CandidateError::EmptyGroundTruth);
    }
    let presentation = anchors.iter().map(|t| t.name.clone()).collect();
    Ok(CandidateList {
        mode: CandidateMode::Gt,
        anchors,
        hard_negatives: Vec::new(),
        easy_negatives: Vec::new(),
        seed: 0,
        presentation,
    })
}
