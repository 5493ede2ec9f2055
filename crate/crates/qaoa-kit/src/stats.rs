//! Dataset statistics and ratio-stratified sampling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::model::{classify_structure, HopClass, QaoaConversation, Routing, TurnClass};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("target ratio is unachievable: {detail}")]
    RatioUnachievable { detail: String },
    #[error("invalid ratio: {detail}")]
    InvalidRatio { detail: String },
}

/// Counts and distributions over one dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub conversations: usize,
    pub turns: usize,
    pub calls: usize,
    pub single_turn: usize,
    pub multi_turn: usize,
    /// Per-turn hop counts; turns with no calls are tracked separately.
    pub single_hop_turns: usize,
    pub multi_hop_turns: usize,
    pub callless_turns: usize,
    /// Conversations that are multi-turn / contain a multi-hop turn.
    pub multi_turn_proportion: f64,
    pub multi_hop_proportion: f64,
    /// Multi-hop turns by inferred routing; mixed turns are excluded from
    /// the serial:parallel ratio and reported on their own.
    pub serial_turns: usize,
    pub parallel_turns: usize,
    pub mixed_turns: usize,
    /// Histogram: gold calls per conversation.
    pub calls_per_sample: BTreeMap<usize, usize>,
    /// Histogram: events per conversation.
    pub messages_per_sample: BTreeMap<usize, usize>,
    /// Distinct candidate tools by taxonomy label.
    pub per_category: BTreeMap<String, usize>,
    pub per_domain: BTreeMap<String, usize>,
    /// Conversations per source tag.
    pub per_source: BTreeMap<String, usize>,
}

/// Computes dataset statistics from classified structure.
pub fn compute_stats(conversations: &[QaoaConversation]) -> DatasetStats {
    let mut stats = DatasetStats { conversations: conversations.len(), ..Default::default() };
    let mut seen_tools: Vec<&str> = Vec::new();

    for conv in conversations {
        let report = classify_structure(conv);
        match report.conversation.turn_class {
            TurnClass::SingleTurn => stats.single_turn += 1,
            TurnClass::MultiTurn => stats.multi_turn += 1,
        }
        if report.conversation.hop_class == HopClass::MultiHop {
            stats.multi_hop_proportion += 1.0;
        }

        let turns = conv.turns();
        stats.turns += turns.len();
        let mut conv_calls = 0usize;
        for (turn, label) in turns.iter().zip(&report.turns) {
            let calls = turn.steps.len();
            conv_calls += calls;
            if calls == 0 {
                stats.callless_turns += 1;
                continue;
            }
            match label.hop_class {
                HopClass::SingleHop => stats.single_hop_turns += 1,
                HopClass::MultiHop => {
                    stats.multi_hop_turns += 1;
                    match label.routing {
                        Routing::Serial => stats.serial_turns += 1,
                        Routing::Parallel => stats.parallel_turns += 1,
                        Routing::Mixed => stats.mixed_turns += 1,
                        Routing::NotApplicable => {}
                    }
                }
            }
        }
        stats.calls += conv_calls;
        *stats.calls_per_sample.entry(conv_calls).or_insert(0) += 1;
        *stats.messages_per_sample.entry(conv.events.len()).or_insert(0) += 1;

        let source = conv.source.clone().unwrap_or_else(|| "unlabeled".to_string());
        *stats.per_source.entry(source).or_insert(0) += 1;

        for tool in &conv.candidates {
            if seen_tools.contains(&tool.name.as_str()) {
                continue;
            }
            seen_tools.push(&tool.name);
            if let Some(c) = tool.category {
                *stats.per_category.entry(c.to_string()).or_insert(0) += 1;
            }
            if let Some(d) = tool.domain {
                *stats.per_domain.entry(d.to_string()).or_insert(0) += 1;
            }
        }
    }

    if stats.conversations > 0 {
        stats.multi_turn_proportion = stats.multi_turn as f64 / stats.conversations as f64;
        stats.multi_hop_proportion /= stats.conversations as f64;
    } else {
        stats.multi_hop_proportion = 0.0;
    }
    stats
}

/// Largest subset hitting `serial:parallel` exactly.
///
/// Conversations are stratified by conversation-level routing (mixed and
/// routing-free conversations are left out); with `k = min(|serial|/s,
/// |parallel|/p)` the sample takes `k·s` serial and `k·p` parallel
/// conversations, drawn seeded without replacement, returned in dataset
/// order.
pub fn stratify_by_ratio(
    conversations: &[QaoaConversation],
    serial_parts: usize,
    parallel_parts: usize,
    rng_seed: u64,
) -> Result<Vec<QaoaConversation>, StatsError> {
    if serial_parts == 0 || parallel_parts == 0 {
        return Err(StatsError::InvalidRatio {
            detail: "both ratio parts must be positive".to_string(),
        });
    }
    let mut serial = Vec::new();
    let mut parallel = Vec::new();
    for (i, conv) in conversations.iter().enumerate() {
        match classify_structure(conv).conversation.routing {
            Routing::Serial => serial.push(i),
            Routing::Parallel => parallel.push(i),
            _ => {}
        }
    }
    if serial.is_empty() || parallel.is_empty() {
        return Err(StatsError::RatioUnachievable {
            detail: format!(
                "dataset has {} serial and {} parallel conversations",
                serial.len(),
                parallel.len()
            ),
        });
    }
    let k = (serial.len() / serial_parts).min(parallel.len() / parallel_parts);
    if k == 0 {
        return Err(StatsError::RatioUnachievable {
            detail: format!(
                "no multiple of {serial_parts}:{parallel_parts} fits {} serial and {} parallel",
                serial.len(),
                parallel.len()
            ),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    serial.shuffle(&mut rng);
    parallel.shuffle(&mut rng);
    let mut chosen: Vec<usize> = serial[..k * serial_parts]
        .iter()
        .chain(&parallel[..k * parallel_parts])
        .copied()
        .collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| conversations[i].clone()).collect())
}
