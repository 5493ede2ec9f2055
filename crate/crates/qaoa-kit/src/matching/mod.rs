//! Cascaded call matching: rule-based exact matching on normalized calls,
//! then per-argument ROUGE-L semantic matching for string values.
//!
//! Every verdict satisfies the implication chain
//! `strict_match ⇒ flexible_match ⇒ name_match`.

mod normalize;
mod rouge;

pub use normalize::{
    normalize_call, normalize_text, normalize_tool_name, normalize_value, NormalizedCall,
    NormalizedValue,
};
pub use rouge::{rouge_l, rouge_l_tokens, tokenize};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::FunctionCall;

/// Default ROUGE-L score at or above which a string argument counts as a
/// semantic match.
pub const DEFAULT_SEMANTIC_THRESHOLD: f64 = 0.7;

/// Outcome of comparing one argument pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "score")]
pub enum ArgOutcome {
    /// Normalized values are equal.
    Exact,
    /// Text pair that cleared the ROUGE-L threshold.
    Semantic(f64),
    /// Present on both sides but neither equal nor semantically close.
    Failed,
    /// Key present only in the gold call.
    Missing,
    /// Key present only in the prediction.
    Extra,
}

/// Call-level result of cascaded matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchVerdict {
    pub name_match: bool,
    pub strict_match: bool,
    pub flexible_match: bool,
    /// Per-argument outcomes, gold keys first, prediction-only keys after.
    pub detail: Vec<(String, ArgOutcome)>,
}

impl MatchVerdict {
    /// The all-false verdict used for unassigned and padded predictions.
    pub fn none() -> Self {
        MatchVerdict {
            name_match: false,
            strict_match: false,
            flexible_match: false,
            detail: Vec::new(),
        }
    }
}

/// Strict rule-based matching: equality of normalized names and of the full
/// normalized argument maps.
pub fn rule_match(pred: &FunctionCall, gold: &FunctionCall) -> bool {
    let p = normalize_call(pred);
    let g = normalize_call(gold);
    p.norm_name == g.norm_name && p.norm_args == g.norm_args
}

/// Tokens used for semantic argument comparison: the raw strings lowercased,
/// split on non-alphanumeric runs, with whole-word articles dropped.
/// Normalized text is unusable here because it erases token boundaries.
fn semantic_tokens(raw: &str) -> Vec<String> {
    tokenize(raw)
        .into_iter()
        .filter(|t| !matches!(t.as_str(), "a" | "an" | "the"))
        .collect()
}

/// Cascaded comparison of a predicted call against a gold call.
///
/// `name_match` compares normalized names; `strict_match` is [`rule_match`];
/// `flexible_match` additionally lets a string-valued argument pair pass via
/// ROUGE-L at `threshold`, still requiring identical key sets.
pub fn cascaded_match(pred: &FunctionCall, gold: &FunctionCall, threshold: f64) -> MatchVerdict {
    let name_match = normalize_tool_name(&pred.name) == normalize_tool_name(&gold.name);

    let mut detail = Vec::new();
    let mut keys_equal = true;
    let mut all_exact = true;
    let mut all_flexible = true;

    for (key, gold_raw) in &gold.arguments {
        match pred.arguments.get(key) {
            None => {
                keys_equal = false;
                all_exact = false;
                all_flexible = false;
                detail.push((key.clone(), ArgOutcome::Missing));
            }
            Some(pred_raw) => {
                let outcome = compare_values(pred_raw, gold_raw, threshold);
                match &outcome {
                    ArgOutcome::Exact => {}
                    ArgOutcome::Semantic(_) => all_exact = false,
                    _ => {
                        all_exact = false;
                        all_flexible = false;
                    }
                }
                detail.push((key.clone(), outcome));
            }
        }
    }
    for key in pred.arguments.keys() {
        if !gold.arguments.contains_key(key) {
            keys_equal = false;
            all_exact = false;
            all_flexible = false;
            detail.push((key.clone(), ArgOutcome::Extra));
        }
    }

    let strict_match = name_match && keys_equal && all_exact;
    let flexible_match = name_match && keys_equal && all_flexible;
    MatchVerdict { name_match, strict_match, flexible_match, detail }
}

fn compare_values(pred: &Value, gold: &Value, threshold: f64) -> ArgOutcome {
    let np = normalize_value(pred);
    let ng = normalize_value(gold);
    if np == ng {
        return ArgOutcome::Exact;
    }
    // The semantic path applies to text-valued pairs only; anything that
    // normalized to a date, number, array, or object must match exactly.
    if let (NormalizedValue::Text(_), NormalizedValue::Text(_)) = (&np, &ng) {
        if let (Value::String(p), Value::String(g)) = (pred, gold) {
            let score = rouge_l_tokens(&semantic_tokens(p), &semantic_tokens(g));
            if score >= threshold {
                return ArgOutcome::Semantic(score);
            }
        }
    }
    ArgOutcome::Failed
}
