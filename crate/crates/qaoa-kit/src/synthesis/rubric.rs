//! Rubric-based quality gate.
//!
//! A judge provider scores six dimensions from 1 to 10 — tool_fit, clarity,
//! naturalness (query side) and success, grounding, efficiency (trajectory
//! side) — plus an anchor-linkage score for multi-turn episodes. Single- and
//! multi-hop drafts pass when the minimum is at least 4.0 and the mean at
//! least 8.0; multi-turn drafts pass on the weighted composite
//! `0.4·query + 0.4·trajectory + 0.2·anchor` at 8.0 with the same minimum.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::model::serialize_conversation;
use crate::providers::{ChatProvider, ChatRequest};

use super::generate::{parse_payload, TrajectoryDraft};
use super::prompts;
use super::task::Scenario;
use super::SynthesisError;

/// No dimension may fall below this.
pub const MIN_DIMENSION_SCORE: f64 = 4.0;
/// Mean (or composite) acceptance threshold; boundaries are inclusive.
pub const ACCEPT_SCORE: f64 = 8.0;
const QUERY_WEIGHT: f64 = 0.4;
const TRAJECTORY_WEIGHT: f64 = 0.4;
const ANCHOR_WEIGHT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricScores {
    pub tool_fit: f64,
    pub clarity: f64,
    pub naturalness: f64,
    pub success: f64,
    pub grounding: f64,
    pub efficiency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_anchor: Option<f64>,
}

impl RubricScores {
    pub fn core(&self) -> [f64; 6] {
        [
            self.tool_fit,
            self.clarity,
            self.naturalness,
            self.success,
            self.grounding,
            self.efficiency,
        ]
    }

    pub fn query_mean(&self) -> f64 {
        (self.tool_fit + self.clarity + self.naturalness) / 3.0
    }

    pub fn trajectory_mean(&self) -> f64 {
        (self.success + self.grounding + self.efficiency) / 3.0
    }

    pub fn core_mean(&self) -> f64 {
        self.core().iter().sum::<f64>() / 6.0
    }

    /// Minimum over every scored dimension, anchor included when present.
    pub fn min_score(&self) -> f64 {
        let core_min = self.core().into_iter().fold(f64::INFINITY, f64::min);
        match self.s_anchor {
            Some(a) => core_min.min(a),
            None => core_min,
        }
    }

    /// Weighted composite for multi-turn episodes; `None` without an anchor
    /// score.
    pub fn composite(&self) -> Option<f64> {
        self.s_anchor.map(|anchor| {
            QUERY_WEIGHT * self.query_mean()
                + TRAJECTORY_WEIGHT * self.trajectory_mean()
                + ANCHOR_WEIGHT * anchor
        })
    }

    fn in_range(&self) -> bool {
        let ok = |s: f64| (1.0..=10.0).contains(&s);
        self.core().into_iter().all(ok) && self.s_anchor.map_or(true, ok)
    }
}

/// Gate outcome with the scores that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub accepted: bool,
    pub scores: RubricScores,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Applies the acceptance thresholds to a score set.
pub fn decide(scores: RubricScores, multi_turn: bool) -> Result<GateDecision, SynthesisError> {
    if multi_turn && scores.s_anchor.is_none() {
        return Err(SynthesisError::JudgeError {
            detail: "multi-turn scores lack s_anchor".to_string(),
        });
    }
    let min = scores.min_score();
    if min < MIN_DIMENSION_SCORE {
        return Ok(GateDecision {
            accepted: false,
            reason: Some(format!("minimum dimension {min:.1} below {MIN_DIMENSION_SCORE:.1}")),
            scores,
        });
    }
    if multi_turn {
        let composite = scores.composite().expect("anchor present");
        if composite < ACCEPT_SCORE {
            return Ok(GateDecision {
                accepted: false,
                reason: Some(format!("composite {composite:.2} below {ACCEPT_SCORE:.1}")),
                scores,
            });
        }
    } else {
        let mean = scores.core_mean();
        if mean < ACCEPT_SCORE {
            return Ok(GateDecision {
                accepted: false,
                reason: Some(format!("mean {mean:.2} below {ACCEPT_SCORE:.1}")),
                scores,
            });
        }
    }
    Ok(GateDecision { accepted: true, scores, reason: None })
}

fn judge_prompt(draft: &TrajectoryDraft, multi_turn: bool) -> Result<String, SynthesisError> {
    let conversation = serialize_conversation(&draft.conversation)?;
    let anchor_dimension = if multi_turn {
        "- s_anchor: later turns explicitly reuse anchors introduced by earlier \
         observations, and those references matter for the tool calls.\n"
    } else {
        ""
    };
    Ok(prompts::render(
        prompts::JUDGE,
        &[
            ("anchor_dimension", anchor_dimension.to_string()),
            ("conversation", conversation),
            ("context", prompts::context_block(&json!({"task": "judge", "multi_turn": multi_turn}))),
        ],
    ))
}

/// Scores a draft with the judge provider and applies the thresholds.
/// An undecodable score payload is re-asked once, then fails as a judge
/// error.
pub fn quality_gate(
    draft: &TrajectoryDraft,
    scenario: Scenario,
    judge: &dyn ChatProvider,
) -> Result<GateDecision, SynthesisError> {
    let multi_turn = scenario == Scenario::MultiTurn;
    let prompt = judge_prompt(draft, multi_turn)?;
    let request = ChatRequest::user(prompts::GENERATOR_SYSTEM, prompt);

    let mut last_error = String::new();
    for _ in 0..2 {
        let response = judge.chat(&request)?;
        match parse_payload::<RubricScores>(&response.text) {
            Ok(scores) if scores.in_range() => return decide(scores, multi_turn),
            Ok(_) => last_error = "scores outside the 1..10 range".to_string(),
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(SynthesisError::JudgeError { detail: last_error })
}
