//! Keyword-based removal of time-sensitive tools.
//!
//! A tool is dropped when any parameter name — including nested property
//! names — matches a temporal keyword under one of the enabled naming
//! conventions. Matching is case-insensitive and looks only at parameter
//! names, never at values or descriptions.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::model::{PropertySchema, ToolSpec};

use super::{RemovedTool, StageReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamingConvention {
    /// `travel_date`: the keyword appears as consecutive `_` segments.
    Snake,
    /// `travel-date`: consecutive `-` segments.
    Kebab,
    /// `travelDate`: consecutive camel-case words.
    Camel,
    /// Isolated occurrence with non-alphanumeric (or edge) boundaries.
    WordBoundary,
}

impl NamingConvention {
    pub const ALL: [NamingConvention; 4] = [
        NamingConvention::Snake,
        NamingConvention::Kebab,
        NamingConvention::Camel,
        NamingConvention::WordBoundary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NamingConvention::Snake => "snake",
            NamingConvention::Kebab => "kebab",
            NamingConvention::Camel => "camel",
            NamingConvention::WordBoundary => "word_boundary",
        }
    }
}

/// Keyword lists and enabled conventions for the temporal filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemporalFilterConfig {
    pub core_keywords: Vec<String>,
    pub unit_keywords: Vec<String>,
    pub period_keywords: Vec<String>,
    pub action_keywords: Vec<String>,
    pub scenario_keywords: Vec<String>,
    pub conventions: BTreeSet<NamingConvention>,
}

fn keywords(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for TemporalFilterConfig {
    fn default() -> Self {
        TemporalFilterConfig {
            core_keywords: keywords(&["date", "dates", "time", "times", "datetime", "timestamp"]),
            unit_keywords: keywords(&[
                "day", "days", "hour", "hours", "minute", "minutes", "second", "seconds",
            ]),
            period_keywords: keywords(&["year", "years", "month", "months", "week", "weeks"]),
            action_keywords: keywords(&[
                "when", "schedule", "scheduled", "duration", "period", "periods",
            ]),
            scenario_keywords: keywords(&[
                "start_time",
                "end_time",
                "start_date",
                "end_date",
                "pickup_time",
                "dropoff_time",
            ]),
            conventions: NamingConvention::ALL.into_iter().collect(),
        }
    }
}

impl TemporalFilterConfig {
    /// All keyword groups flattened, list order preserved.
    pub fn all_keywords(&self) -> Vec<&str> {
        self.core_keywords
            .iter()
            .chain(&self.unit_keywords)
            .chain(&self.period_keywords)
            .chain(&self.action_keywords)
            .chain(&self.scenario_keywords)
            .map(String::as_str)
            .collect()
    }
}

/// Why a parameter was flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalMatch {
    /// Dotted path of the offending parameter.
    pub parameter: String,
    pub keyword: String,
    pub convention: NamingConvention,
}

/// Splits a name into lowercase camel words: at `_`/`-`/space separators,
/// lower-to-upper transitions, and letter/digit boundaries.
fn camel_words(name: &str) -> Vec<String> {
    let mut words = Vec::new();
    for segment in name.split(['_', '-', ' ', '.']) {
        let mut current = String::new();
        let mut prev_lower = false;
        let mut prev_digit = false;
        for c in segment.chars() {
            let boundary = !current.is_empty()
                && ((c.is_uppercase() && prev_lower) || (c.is_ascii_digit() != prev_digit));
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
    words.into_iter().map(|w| w.to_lowercase()).collect()
}

/// Keyword words: keywords themselves may be compound (`start_time`).
fn keyword_words(keyword: &str) -> Vec<String> {
    keyword
        .split(['_', '-'])
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect()
}

fn contains_contiguous(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || haystack.len() < needle.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

fn segments(name: &str, sep: char) -> Vec<String> {
    name.split(sep).filter(|s| !s.is_empty()).map(|s| s.to_lowercase()).collect()
}

fn word_boundary_match(name: &str, keyword: &str) -> bool {
    let lower = name.to_lowercase();
    let needle = keyword.to_lowercase();
    if needle.is_empty() {
        return false;
    }
    let mut start = 0;
    while let Some(pos) = lower[start..].find(&needle) {
        let begin = start + pos;
        let end = begin + needle.len();
        let left_ok = begin == 0 || !lower[..begin].chars().next_back().unwrap().is_alphanumeric();
        let right_ok = end == lower.len() || !lower[end..].chars().next().unwrap().is_alphanumeric();
        if left_ok && right_ok {
            return true;
        }
        start = begin + 1;
    }
    false
}

/// Does one parameter name match one keyword under one convention?
pub fn keyword_matches(parameter: &str, keyword: &str, convention: NamingConvention) -> bool {
    let kw_words = keyword_words(keyword);
    match convention {
        NamingConvention::Snake => contains_contiguous(&segments(parameter, '_'), &kw_words),
        NamingConvention::Kebab => contains_contiguous(&segments(parameter, '-'), &kw_words),
        NamingConvention::Camel => contains_contiguous(&camel_words(parameter), &kw_words),
        NamingConvention::WordBoundary => word_boundary_match(parameter, keyword),
    }
}

/// Dotted paths of all parameter names in a schema, nested ones included.
pub fn parameter_paths(tool: &ToolSpec) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(schema) = &tool.input_schema {
        if let Some(props) = &schema.properties {
            for (name, prop) in props {
                walk(name.clone(), prop, &mut out);
            }
        }
    }
    out
}

fn walk(path: String, prop: &PropertySchema, out: &mut Vec<String>) {
    if let Some(props) = &prop.properties {
        for (name, nested) in props {
            walk(format!("{path}.{name}"), nested, out);
        }
    }
    if let Some(items) = &prop.items {
        if let Some(props) = &items.properties {
            for (name, nested) in props {
                walk(format!("{path}[].{name}"), nested, out);
            }
        }
    }
    out.push(path);
}

/// First temporal match for a tool, scanning parameters in schema order,
/// conventions in declaration order, keywords in list order. The final path
/// component is what gets matched; dotted prefixes only locate it.
pub fn find_temporal_match(tool: &ToolSpec, cfg: &TemporalFilterConfig) -> Option<TemporalMatch> {
    let keywords = cfg.all_keywords();
    for path in parameter_paths(tool) {
        let leaf = path.rsplit('.').next().unwrap_or(&path);
        let leaf = leaf.trim_end_matches("[]");
        for convention in NamingConvention::ALL {
            if !cfg.conventions.contains(&convention) {
                continue;
            }
            for keyword in &keywords {
                if keyword_matches(leaf, keyword, convention) {
                    return Some(TemporalMatch {
                        parameter: path.clone(),
                        keyword: (*keyword).to_string(),
                        convention,
                    });
                }
            }
        }
    }
    None
}

/// Removes tools whose parameter names look temporal. The report names the
/// matched parameter, keyword, and convention per removed tool.
pub fn temporal_filter(
    tools: Vec<ToolSpec>,
    cfg: &TemporalFilterConfig,
) -> (Vec<ToolSpec>, StageReport) {
    let tools_in = tools.len();
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for tool in tools {
        match find_temporal_match(&tool, cfg) {
            Some(m) => removed.push(RemovedTool {
                name: tool.name.clone(),
                reason: format!(
                    "parameter '{}' matches temporal keyword '{}' ({})",
                    m.parameter,
                    m.keyword,
                    m.convention.as_str()
                ),
            }),
            None => kept.push(tool),
        }
    }
    let report = StageReport::new("temporal_filter", tools_in, removed, kept.len());
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn tool_with_params(params: &[&str]) -> ToolSpec {
        let mut properties = serde_json::Map::new();
        for p in params {
            properties.insert(p.to_string(), json!({"type": "str"}));
        }
        serde_json::from_value(json!({
            "name": "t",
            "description": "d",
            "inputSchema": {"type": "object", "properties": properties, "required": []}
        }))
        .unwrap()
    }

    fn flagged(param: &str) -> Option<TemporalMatch> {
        find_temporal_match(&tool_with_params(&[param]), &TemporalFilterConfig::default())
    }

    #[test]
    fn snake_segment_match() {
        let m = flagged("travel_date").expect("travel_date must be flagged");
        assert_eq!(m.keyword, "date");
        assert_eq!(m.convention, NamingConvention::Snake);
    }

    #[test]
    fn camel_word_match() {
        assert!(keyword_matches("startTime", "time", NamingConvention::Camel));
        assert!(!keyword_matches("startTime", "time", NamingConvention::Snake));
        assert!(flagged("startTime").is_some());
    }

    #[test]
    fn kebab_segment_match() {
        assert!(keyword_matches("travel-date", "date", NamingConvention::Kebab));
        assert!(flagged("travel-date").is_some());
    }

    #[test]
    fn embedded_keyword_is_not_a_boundary_match() {
        assert!(flagged("update").is_none());
        assert!(!keyword_matches("update", "date", NamingConvention::WordBoundary));
        // "datetimes" is neither a keyword nor a boundary occurrence of one.
        assert!(flagged("datetimes_x").is_none());
    }

    #[test]
    fn compound_keywords_match_consecutive_segments() {
        assert!(keyword_matches("flight_start_time_utc", "start_time", NamingConvention::Snake));
        assert!(keyword_matches("pickupStartTime", "start_time", NamingConvention::Camel));
        assert!(!keyword_matches("start_of_time", "start_time", NamingConvention::Snake));
    }

    #[test]
    fn nested_parameter_names_are_scanned() {
        let tool: ToolSpec = serde_json::from_value(json!({
            "name": "t",
            "description": "d",
            "inputSchema": {
                "type": "object",
                "properties": {
                    "filters": {
                        "type": "object",
                        "properties": {"end_date": {"type": "str"}}
                    }
                }
            }
        }))
        .unwrap();
        let m = find_temporal_match(&tool, &TemporalFilterConfig::default()).unwrap();
        assert_eq!(m.parameter, "filters.end_date");
    }

    #[test]
    fn decisions_use_parameter_names_only() {
        // Temporal words in the description or values must not trigger.
        let tool: ToolSpec = serde_json::from_value(json!({
            "name": "dated_tool_for_timestamps",
            "description": "returns the current date and time",
            "inputSchema": {
                "type": "object",
                "properties": {"city": {"type": "str", "description": "date of travel"}}
            }
        }))
        .unwrap();
        assert!(find_temporal_match(&tool, &TemporalFilterConfig::default()).is_none());
    }

    #[test]
    fn filter_reports_reasons() {
        let tools = vec![tool_with_params(&["travel_date"]), tool_with_params(&["city"])];
        let (kept, report) = temporal_filter(tools, &TemporalFilterConfig::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(report.tools_in, 2);
        assert_eq!(report.removed_count, 1);
        assert!(report.removed[0].reason.contains("travel_date"));
        assert!(report.removed[0].reason.contains("snake"));
    }
}
