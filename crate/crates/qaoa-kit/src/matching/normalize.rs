//! Deterministic canonicalization of tool names and argument values, applied
//! before exact matching.
//!
//! String values canonicalize in a fixed order: recognized date forms become
//! `YYYY-MM-DD`, bracketed lists are parsed into real arrays, numeric
//! strings become numbers, and whatever remains becomes canonical text
//! (lowercased, punctuation and whitespace removed, articles dropped).

use chrono::NaiveDate;
use serde_json::{Map, Value};
use std::collections::BTreeMap;

use crate::model::FunctionCall;

/// Date grammars recognized by value normalization. Ambiguous slashed forms
/// are read month-first.
const DATE_FORMATS: [&str; 4] = ["%B %d, %Y", "%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y"];

/// A canonical argument value.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalizedValue {
    /// A calendar date as `YYYY-MM-DD`.
    Date(String),
    Number(f64),
    Boolean(bool),
    Array(Vec<NormalizedValue>),
    /// Nested object arguments; keys are kept verbatim, values normalized.
    Object(BTreeMap<String, NormalizedValue>),
    /// Canonical text: lowercase alphanumerics with articles removed.
    Text(String),
    Null,
}

impl NormalizedValue {
    /// Re-applies normalization to an already-normalized value. The result
    /// is always `self`: normalization is idempotent on its own image.
    pub fn renormalize(&self) -> NormalizedValue {
        match self {
            NormalizedValue::Text(s) => NormalizedValue::Text(normalize_text(s)),
            NormalizedValue::Array(items) => {
                NormalizedValue::Array(items.iter().map(|v| v.renormalize()).collect())
            }
            NormalizedValue::Object(map) => NormalizedValue::Object(
                map.iter().map(|(k, v)| (k.clone(), v.renormalize())).collect(),
            ),
            other => other.clone(),
        }
    }
}

/// A call after canonicalization, ready for exact comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCall {
    pub norm_name: String,
    pub norm_args: BTreeMap<String, NormalizedValue>,
}

/// Normalizes a tool name: every character outside the letter class is
/// removed and the rest lowercased, so `uber.ride` and `uber_ride` coincide.
pub fn normalize_tool_name(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(|c| c.to_lowercase())
        .collect()
}

/// Canonical text form: lowercase, split on non-alphanumeric runs, drop
/// whole-word articles (a/an/the), concatenate the rest.
pub fn normalize_text(s: &str) -> String {
    let mut out = String::new();
    for token in s.split(|c: char| !c.is_alphanumeric()) {
        if token.is_empty() {
            continue;
        }
        let lower = token.to_lowercase();
        if matches!(lower.as_str(), "a" | "an" | "the") {
            continue;
        }
        out.push_str(&lower);
    }
    out
}

fn canonical_date(s: &str) -> Option<String> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return None;
    }
    for format in DATE_FORMATS {
        if let Ok(date) = NaiveDate::parse_from_str(trimmed, format) {
            return Some(date.format("%Y-%m-%d").to_string());
        }
    }
    None
}

fn numeric_string(s: &str) -> Option<f64> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return None;
    }
    match trimmed.parse::<f64>() {
        Ok(n) if n.is_finite() => Some(n),
        _ => None,
    }
}

fn bracketed_array(s: &str) -> Option<Vec<Value>> {
    let trimmed = s.trim();
    if !trimmed.starts_with('[') {
        return None;
    }
    match serde_json::from_str::<Value>(trimmed) {
        Ok(Value::Array(items)) => Some(items),
        _ => None,
    }
}

/// Canonicalizes one raw argument value. Total: unrecognized forms fall
/// through to canonical text.
pub fn normalize_value(v: &Value) -> NormalizedValue {
    match v {
        Value::Null => NormalizedValue::Null,
        Value::Bool(b) => NormalizedValue::Boolean(*b),
        Value::Number(n) => match n.as_f64() {
            Some(f) if f.is_finite() => NormalizedValue::Number(f),
            _ => NormalizedValue::Text(normalize_text(&n.to_string())),
        },
        Value::Array(items) => NormalizedValue::Array(items.iter().map(normalize_value).collect()),
        Value::Object(map) => NormalizedValue::Object(
            map.iter().map(|(k, v)| (k.clone(), normalize_value(v))).collect(),
        ),
        Value::String(s) => {
            if let Some(date) = canonical_date(s) {
                return NormalizedValue::Date(date);
            }
            if let Some(items) = bracketed_array(s) {
                return NormalizedValue::Array(items.iter().map(normalize_value).collect());
            }
            if let Some(n) = numeric_string(s) {
                return NormalizedValue::Number(n);
            }
            NormalizedValue::Text(normalize_text(s))
        }
    }
}

/// Normalizes a whole call: name plus every argument key-value pair.
pub fn normalize_call(call: &FunctionCall) -> NormalizedCall {
    NormalizedCall {
        norm_name: normalize_tool_name(&call.name),
        norm_args: normalize_arguments(&call.arguments),
    }
}

pub(crate) fn normalize_arguments(args: &Map<String, Value>) -> BTreeMap<String, NormalizedValue> {
    args.iter().map(|(k, v)| (k.clone(), normalize_value(v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn separator_variants_of_a_name_coincide() {
        assert_eq!(normalize_tool_name("uber.ride"), "uberride");
        assert_eq!(normalize_tool_name("uber_ride"), "uberride");
        assert_eq!(normalize_tool_name("fetch"), "fetch");
        assert_eq!(normalize_tool_name("GetWeather2"), "getweather");
    }

    #[test]
    fn date_forms_share_a_canonical_spelling() {
        let expect = NormalizedValue::Date("2023-04-01".to_string());
        assert_eq!(normalize_value(&json!("April 1, 2023")), expect);
        assert_eq!(normalize_value(&json!("2023-04-01")), expect);
        assert_eq!(normalize_value(&json!("2023/04/01")), expect);
        assert_eq!(normalize_value(&json!("04/01/2023")), expect);
        // Ambiguous slashed dates read month-first.
        assert_eq!(
            normalize_value(&json!("01/02/2023")),
            NormalizedValue::Date("2023-01-02".to_string())
        );
        // Invalid calendar dates fall through to text.
        assert!(matches!(
            normalize_value(&json!("2023-02-30")),
            NormalizedValue::Text(_)
        ));
    }

    #[test]
    fn text_drops_articles_punctuation_and_whitespace() {
        assert_eq!(
            normalize_value(&json!("A black cat")),
            NormalizedValue::Text("blackcat".to_string())
        );
        assert_eq!(
            normalize_value(&json!("blackcat")),
            NormalizedValue::Text("blackcat".to_string())
        );
        assert_eq!(normalize_text("  The Cat "), "cat");
        // "theater" is not the article "the".
        assert_eq!(normalize_text("theater"), "theater");
    }

    #[test]
    fn numeric_strings_equal_numbers() {
        assert_eq!(normalize_value(&json!("40.7128")), NormalizedValue::Number(40.7128));
        assert_eq!(normalize_value(&json!(40.7128)), NormalizedValue::Number(40.7128));
        assert_eq!(normalize_value(&json!("7")), normalize_value(&json!(7)));
    }

    #[test]
    fn stringified_arrays_parse_into_arrays() {
        let expect = NormalizedValue::Array(vec![
            NormalizedValue::Number(1.0),
            NormalizedValue::Number(2.0),
            NormalizedValue::Number(3.0),
        ]);
        assert_eq!(normalize_value(&json!("[1, 2, 3]")), expect);
        assert_eq!(normalize_value(&json!([1, 2, 3])), expect);
        // Non-list bracketed text falls through to text.
        assert!(matches!(
            normalize_value(&json!("[not json")),
            NormalizedValue::Text(_)
        ));
    }

    #[test]
    fn nested_objects_normalize_recursively() {
        let v = normalize_value(&json!({"when": "2023/04/01", "tags": ["A cat", 5]}));
        let NormalizedValue::Object(map) = v else { panic!("expected object") };
        assert_eq!(map["when"], NormalizedValue::Date("2023-04-01".to_string()));
        assert_eq!(
            map["tags"],
            NormalizedValue::Array(vec![
                NormalizedValue::Text("cat".to_string()),
                NormalizedValue::Number(5.0),
            ])
        );
    }

    #[test]
    fn renormalize_is_identity_on_normalized_values() {
        for raw in [
            json!("April 1, 2023"),
            json!("A black cat"),
            json!("40.7128"),
            json!("[1, \"the dog\", false]"),
            json!({"k": "2023/04/01", "n": null}),
            json!(true),
        ] {
            let normalized = normalize_value(&raw);
            assert_eq!(normalized.renormalize(), normalized, "raw = {raw}");
        }
    }
}
