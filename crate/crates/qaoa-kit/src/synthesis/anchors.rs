//! Anchor extraction: harvesting value-like state variables from
//! observation text, and the adjacent-turn linkage check built on it.
//!
//! An anchor is anything a later turn could plausibly inherit: quoted
//! strings, identifiers that mix letters and digits, standalone numbers of
//! three or more digits, and values of keys whose names end in `id`, `code`,
//! or `number` under any naming convention. Anchors are at least two
//! characters after trimming, deduplicated, order-preserving.

use serde_json::Value;

use crate::model::QaoaConversation;

use super::SynthesisError;

/// Key suffixes whose values are harvested from JSON observations.
const VALUE_KEY_SUFFIXES: [&str; 3] = ["id", "code", "number"];

/// Collapses every whitespace run to a single space and trims the ends.
/// All anchor containment checks run over collapsed text so whitespace-only
/// edits cannot change the outcome.
pub(crate) fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// True when `value` occurs verbatim (modulo whitespace collapsing) in `text`.
pub(crate) fn text_contains_value(text: &str, value: &str) -> bool {
    let needle = collapse_ws(value);
    if needle.len() < 2 {
        return false;
    }
    collapse_ws(text).contains(&needle)
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Extracts candidate anchor values from observation text.
pub fn extract_anchors(observation: &str) -> Vec<String> {
    let mut found: Vec<(usize, String)> = Vec::new();

    // Quoted strings, by position.
    let bytes: Vec<char> = observation.chars().collect();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        if c == '"' || c == '\'' {
            if let Some(close) = bytes[i + 1..].iter().position(|&d| d == c) {
                let content: String = bytes[i + 1..i + 1 + close].iter().collect();
                found.push((i, collapse_ws(&content)));
                i += close + 2;
                continue;
            }
        }
        i += 1;
    }

    // Identifier and number tokens, by position. Runs inside quoted regions
    // are scanned too: a query may inherit the inner identifier rather than
    // the full quoted string.
    let mut token_start: Option<usize> = None;
    let chars: Vec<char> = observation.chars().collect();
    for (idx, &c) in chars.iter().enumerate() {
        if is_token_char(c) {
            if token_start.is_none() {
                token_start = Some(idx);
            }
        } else if let Some(start) = token_start.take() {
            push_token(&mut found, start, &chars[start..idx]);
        }
    }
    if let Some(start) = token_start {
        push_token(&mut found, start, &chars[start..]);
    }

    // Values of id/code/number-suffixed keys when the text is a JSON document.
    if let Ok(value) = serde_json::from_str::<Value>(observation.trim()) {
        let mut keyed = Vec::new();
        collect_keyed_values(&value, &mut keyed);
        let base = observation.len();
        for (offset, v) in keyed.into_iter().enumerate() {
            found.push((base + offset, v));
        }
    }

    let mut out: Vec<String> = Vec::new();
    found.sort_by_key(|(pos, _)| *pos);
    for (_, v) in found {
        let trimmed = v.trim().to_string();
        if trimmed.chars().count() >= 2 && !out.contains(&trimmed) {
            out.push(trimmed);
        }
    }
    out
}

fn push_token(found: &mut Vec<(usize, String)>, pos: usize, token: &[char]) {
    let has_digit = token.iter().any(|c| c.is_ascii_digit());
    if !has_digit {
        return;
    }
    let has_letter = token.iter().any(|c| c.is_ascii_alphabetic());
    let token: String = token.iter().collect();
    if has_letter {
        found.push((pos, token));
    } else {
        // Bare numbers only count once they reach three digits.
        let digits = token.chars().filter(|c| c.is_ascii_digit()).count();
        if digits >= 3 {
            found.push((pos, token));
        }
    }
}

/// True when the key's final word is one of the value-key suffixes under
/// snake, kebab, or camel conventions, or the key is the suffix itself.
fn key_is_value_like(key: &str) -> bool {
    let last = last_word(key);
    VALUE_KEY_SUFFIXES.iter().any(|s| last.eq_ignore_ascii_case(s))
}

fn last_word(key: &str) -> String {
    let mut words: Vec<String> = Vec::new();
    for segment in key.split(['_', '-', ' ', '.']) {
        let mut current = String::new();
        let mut prev_lower = false;
        let mut prev_digit = false;
        for c in segment.chars() {
            let boundary = (c.is_uppercase() && prev_lower)
                || (c.is_ascii_digit() != prev_digit && !current.is_empty());
            if boundary {
                words.push(std::mem::take(&mut current));
            }
            current.push(c);
            prev_lower = c.is_lowercase();
            prev_digit = c.is_ascii_digit();
        }
        if !current.is_empty() {
            words.push(current);
        }
    }
    words.pop().unwrap_or_default()
}

fn collect_keyed_values(value: &Value, out: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (key, v) in map {
                if key_is_value_like(key) {
                    match v {
                        Value::String(s) => out.push(collapse_ws(s)),
                        Value::Number(n) => out.push(n.to_string()),
                        _ => {}
                    }
                }
                collect_keyed_values(v, out);
            }
        }
        Value::Array(items) => {
            for item in items {
                collect_keyed_values(item, out);
            }
        }
        _ => {}
    }
}

/// Per-turn outcome of the adjacent-turn anchor check.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnLinkage {
    /// 0-based index of the consuming turn (always ≥ 1).
    pub turn: usize,
    /// Anchors harvested from the previous turn's observations.
    pub available: Vec<String>,
    /// Anchors that appear verbatim in this turn's query or call arguments.
    pub consumed: Vec<String>,
    pub pass: bool,
}

/// Linkage report over a whole conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkageReport {
    pub turns: Vec<TurnLinkage>,
    pub pass: bool,
}

/// Checks that every turn after the first consumes at least one anchor
/// introduced by the previous turn's observations, either in its query text
/// or in a tool-call argument.
pub fn check_anchor_linkage(conv: &QaoaConversation) -> Result<LinkageReport, SynthesisError> {
    let turns = conv.turns();
    if turns.len() < 2 {
        return Err(SynthesisError::NotMultiTurn { turns: turns.len() });
    }
    let mut report = LinkageReport { turns: Vec::new(), pass: true };
    for t in 1..turns.len() {
        let mut available = Vec::new();
        for obs in turns[t - 1].observations() {
            for anchor in extract_anchors(obs) {
                if !available.contains(&anchor) {
                    available.push(anchor);
                }
            }
        }
        let turn = &turns[t];
        let mut haystacks = vec![turn.query.to_string()];
        for call in turn.calls() {
            for v in call.arguments.values() {
                haystacks.push(value_text(v));
            }
        }
        let consumed: Vec<String> = available
            .iter()
            .filter(|a| haystacks.iter().any(|h| text_contains_value(h, a)))
            .cloned()
            .collect();
        let pass = !consumed.is_empty();
        report.pass &= pass;
        report.turns.push(TurnLinkage { turn: t, available, consumed, pass });
    }
    Ok(report)
}

/// Text form of an argument value: strings verbatim, everything else in
/// compact encoding.
pub(crate) fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
