//! Multi-stage tool-pool filtering: exact dedup, temporal keyword filter,
//! schema validation, semantic dedup — in that order, with a stage-by-stage
//! reduction report whose arithmetic always balances.

mod semantic;
mod temporal;

pub use semantic::semantic_dedup;
pub use temporal::{
    find_temporal_match, keyword_matches, parameter_paths, temporal_filter, NamingConvention,
    TemporalFilterConfig, TemporalMatch,
};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{PropertySchema, Source, ToolSpec};
use crate::providers::{EmbeddingProvider, ProviderError};

/// Default cosine-similarity threshold for semantic dedup.
pub const DEFAULT_SEMANTIC_DEDUP_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error)]
pub enum CurationError {
    /// Semantic dedup was requested but no embedder is configured, or the
    /// provider failed. The report covers the stages that did run.
    #[error("embedder unavailable: {reason}")]
    EmbedderUnavailable { reason: String, partial: Box<CurationReport> },
    #[error("curation report arithmetic is inconsistent at stage '{stage}'")]
    InconsistentReport { stage: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedTool {
    pub name: String,
    pub reason: String,
}

/// One stage of the reduction flow: counts in/removed/out plus the removal
/// reasons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub tools_in: usize,
    pub removed_count: usize,
    pub tools_out: usize,
    pub removed: Vec<RemovedTool>,
}

impl StageReport {
    pub(crate) fn new(
        stage: &str,
        tools_in: usize,
        removed: Vec<RemovedTool>,
        tools_out: usize,
    ) -> Self {
        StageReport {
            stage: stage.to_string(),
            tools_in,
            removed_count: removed.len(),
            tools_out,
            removed,
        }
    }
}

/// Chained stage reports for a full curation run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurationReport {
    pub stages: Vec<StageReport>,
}

impl CurationReport {
    /// Per stage, `in - removed == out`; consecutive stages chain.
    pub fn validate(&self) -> Result<(), CurationError> {
        for stage in &self.stages {
            if stage.tools_in - stage.removed_count != stage.tools_out
                || stage.removed.len() != stage.removed_count
            {
                return Err(CurationError::InconsistentReport { stage: stage.stage.clone() });
            }
        }
        for pair in self.stages.windows(2) {
            if pair[0].tools_out != pair[1].tools_in {
                return Err(CurationError::InconsistentReport { stage: pair[1].stage.clone() });
            }
        }
        Ok(())
    }

    pub fn survivors(&self) -> Option<usize> {
        self.stages.last().map(|s| s.tools_out)
    }
}

fn is_constructed(source: Option<Source>) -> bool {
    source.is_some_and(|s| s.is_constructed())
}

/// Removes exact duplicates keyed on the (name, description) pair, within
/// and across sources. When a duplicate pair spans sources, the train/test
/// copy is retained; otherwise the first-seen copy. Survivors keep input
/// order.
pub fn exact_dedup(tools: Vec<ToolSpec>) -> (Vec<ToolSpec>, StageReport) {
    let tools_in = tools.len();
    let mut survivor: IndexMap<(String, String), usize> = IndexMap::new();
    for (i, tool) in tools.iter().enumerate() {
        let key = (tool.name.clone(), tool.description.clone());
        match survivor.get(&key).copied() {
            None => {
                survivor.insert(key, i);
            }
            Some(current) => {
                // Train/test copies win; ties keep the earliest.
                if is_constructed(tool.source) && !is_constructed(tools[current].source) {
                    survivor.insert(key, i);
                }
            }
        }
    }
    let keep: Vec<usize> = {
        let mut v: Vec<usize> = survivor.values().copied().collect();
        v.sort_unstable();
        v
    };
    let mut kept = Vec::with_capacity(keep.len());
    let mut removed = Vec::new();
    for (i, tool) in tools.into_iter().enumerate() {
        if keep.binary_search(&i).is_ok() {
            kept.push(tool);
        } else {
            removed.push(RemovedTool {
                name: tool.name.clone(),
                reason: "identical name and description as a retained copy".to_string(),
            });
        }
    }
    let report = StageReport::new("exact_dedup", tools_in, removed, kept.len());
    (kept, report)
}

/// Outcome of schema validation for one tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaValidity {
    pub valid: bool,
    pub violations: Vec<String>,
}

/// A tool is invalid when its schema is absent, has no properties map, or
/// requires a parameter it never declares (checked recursively). Violations
/// name the offending path.
pub fn validate_schema(tool: &ToolSpec) -> SchemaValidity {
    let mut violations = Vec::new();
    match &tool.input_schema {
        None => violations.push("inputSchema: missing".to_string()),
        Some(schema) => {
            match &schema.properties {
                None => violations.push("inputSchema.properties: missing".to_string()),
                Some(props) => {
                    for (i, req) in schema.required.iter().enumerate() {
                        if !props.contains_key(req) {
                            violations.push(format!(
                                "inputSchema.required[{i}]: '{req}' not declared in properties"
                            ));
                        }
                    }
                    for (name, prop) in props {
                        check_property(
                            &format!("inputSchema.properties.{name}"),
                            prop,
                            &mut violations,
                        );
                    }
                }
            }
        }
    }
    SchemaValidity { valid: violations.is_empty(), violations }
}

fn check_property(path: &str, prop: &PropertySchema, violations: &mut Vec<String>) {
    let declared = prop.properties.as_ref();
    for (i, req) in prop.required.iter().enumerate() {
        if declared.map_or(true, |p| !p.contains_key(req)) {
            violations.push(format!("{path}.required[{i}]: '{req}' not declared in properties"));
        }
    }
    if let Some(props) = declared {
        for (name, nested) in props {
            check_property(&format!("{path}.properties.{name}"), nested, violations);
        }
    }
}

fn schema_stage(tools: Vec<ToolSpec>) -> (Vec<ToolSpec>, StageReport) {
    let tools_in = tools.len();
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for tool in tools {
        let validity = validate_schema(&tool);
        if validity.valid {
            kept.push(tool);
        } else {
            removed.push(RemovedTool {
                name: tool.name.clone(),
                reason: validity.violations.join("; "),
            });
        }
    }
    let report = StageReport::new("schema_validation", tools_in, removed, kept.len());
    (kept, report)
}

/// Settings for a curation run.
#[derive(Debug, Clone)]
pub struct CurationConfig {
    pub temporal: TemporalFilterConfig,
    pub semantic_threshold: f64,
    pub skip_semantic: bool,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            temporal: TemporalFilterConfig::default(),
            semantic_threshold: DEFAULT_SEMANTIC_DEDUP_THRESHOLD,
            skip_semantic: false,
        }
    }
}

/// Runs the full reduction flow: exact dedup, temporal filter, schema
/// validation, then semantic dedup. Cheap filters come first so the
/// embedding stage sees the smallest pool.
pub fn run_curation(
    tools: Vec<ToolSpec>,
    cfg: &CurationConfig,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<(Vec<ToolSpec>, CurationReport), CurationError> {
    let mut report = CurationReport::default();

    let (tools, stage) = exact_dedup(tools);
    report.stages.push(stage);
    let (tools, stage) = temporal_filter(tools, &cfg.temporal);
    report.stages.push(stage);
    let (tools, stage) = schema_stage(tools);
    report.stages.push(stage);

    if cfg.skip_semantic {
        return Ok((tools, report));
    }
    let Some(embedder) = embedder else {
        return Err(CurationError::EmbedderUnavailable {
            reason: "no embedding provider configured".to_string(),
            partial: Box::new(report),
        });
    };
    match semantic_dedup(&tools, embedder, cfg.semantic_threshold) {
        Ok((tools, stage)) => {
            report.stages.push(stage);
            Ok((tools, report))
        }
        Err(e) => Err(CurationError::EmbedderUnavailable {
            reason: provider_reason(e),
            partial: Box::new(report),
        }),
    }
}

fn provider_reason(e: ProviderError) -> String {
    e.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::mock::{FixedEmbedder, HashEmbedder};
    use serde_json::json;
    use std::collections::HashMap;

    fn tool(name: &str, description: &str, source: Option<&str>) -> ToolSpec {
        let mut v = json!({
            "name": name,
            "description": description,
            "inputSchema": {
                "type": "object",
                "properties": {"topic": {"type": "str"}},
                "required": ["topic"]
            }
        });
        if let Some(s) = source {
            v["source"] = json!(s);
        }
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn cross_source_duplicates_keep_the_constructed_copy() {
        let tools = vec![tool("a", "d", Some("ret")), tool("a", "d", Some("train"))];
        let (kept, report) = exact_dedup(tools);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].source, Some(Source::Train));
        assert_eq!(report.removed_count, 1);
    }

    #[test]
    fn empty_input_dedups_to_empty() {
        let (kept, report) = exact_dedup(Vec::new());
        assert!(kept.is_empty());
        assert_eq!(report.tools_in, 0);
        assert_eq!(report.tools_out, 0);
    }

    #[test]
    fn same_name_different_description_both_survive() {
        let tools =
            vec![tool("a", "one", None), tool("a", "two", None), tool("a", "one", None)];
        let (kept, _) = exact_dedup(tools);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn first_seen_wins_among_equals_and_among_constructed() {
        let tools = vec![tool("a", "d", Some("test")), tool("a", "d", Some("train"))];
        let (kept, _) = exact_dedup(tools);
        assert_eq!(kept[0].source, Some(Source::Test));

        let tools = vec![tool("b", "d", Some("fc")), tool("b", "d", Some("ret"))];
        let (kept, _) = exact_dedup(tools);
        assert_eq!(kept[0].source, Some(Source::Fc));
    }

    #[test]
    fn missing_schema_is_invalid() {
        let no_schema: ToolSpec =
            serde_json::from_value(json!({"name": "x", "description": "d"})).unwrap();
        let validity = validate_schema(&no_schema);
        assert!(!validity.valid);
        assert_eq!(validity.violations, vec!["inputSchema: missing".to_string()]);
    }

    #[test]
    fn reference_sample_tool_is_valid() {
        let t: ToolSpec = serde_json::from_value(json!({
            "name": "MedicalRecordAccess",
            "description": "API for providing secure access to medical records.",
            "category": "operations",
            "domain": "healthcare",
            "inputSchema": {
                "type": "object",
                "properties": {
                    "patient_name": {"type": "str", "description": "The name of the patient."}
                },
                "required": ["patient_name"]
            }
        }))
        .unwrap();
        assert!(validate_schema(&t).valid);
    }

    #[test]
    fn dangling_requirement_names_the_path() {
        let t: ToolSpec = serde_json::from_value(json!({
            "name": "x",
            "description": "d",
            "inputSchema": {"type": "object", "properties": {}, "required": ["x"]}
        }))
        .unwrap();
        let validity = validate_schema(&t);
        assert!(!validity.valid);
        assert!(validity.violations[0].contains("required[0]"));
    }

    fn pipeline_fixture() -> Vec<ToolSpec> {
        vec![
            tool("alpha", "finds things", None),
            tool("alpha", "finds things", None), // exact duplicate
            {
                let mut t = tool("scheduler", "plans work", None);
                t.input_schema = serde_json::from_value(json!({
                    "type": "object",
                    "properties": {"start_time": {"type": "str"}},
                    "required": ["start_time"]
                }))
                .unwrap();
                t
            },
            serde_json::from_value(json!({"name": "broken", "description": "no schema"}))
                .unwrap(),
            tool("beta", "does stuff", None),
            tool("alphaprime", "finds things too", None), // semantic duplicate of alpha
        ]
    }

    fn fixture_embedder() -> FixedEmbedder {
        let mut map = HashMap::new();
        map.insert("alpha: finds things".to_string(), vec![1.0, 0.0, 0.0]);
        map.insert("alphaprime: finds things too".to_string(), vec![1.0, 0.0, 0.0]);
        map.insert("beta: does stuff".to_string(), vec![0.0, 1.0, 0.0]);
        FixedEmbedder::new(map)
    }

    #[test]
    fn pipeline_reduces_the_fixture_to_two_survivors() {
        let cfg = CurationConfig::default();
        let embedder = fixture_embedder();
        let (kept, report) = run_curation(pipeline_fixture(), &cfg, Some(&embedder)).unwrap();
        let names: Vec<&str> = kept.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, vec!["alpha", "beta"]);
        report.validate().unwrap();
        assert_eq!(report.stages.len(), 4);
        assert_eq!(report.survivors(), Some(2));
    }

    #[test]
    fn all_valid_disjoint_tools_pass_through_unchanged() {
        let tools = vec![tool("a", "one", None), tool("b", "two", None)];
        let cfg = CurationConfig::default();
        let embedder = HashEmbedder::default();
        let (kept, report) = run_curation(tools.clone(), &cfg, Some(&embedder)).unwrap();
        assert_eq!(kept, tools);
        report.validate().unwrap();
    }

    #[test]
    fn temporal_duplicate_is_attributed_to_the_dedup_stage() {
        let temporal = {
            let mut t = tool("sched", "plans", None);
            t.input_schema = serde_json::from_value(json!({
                "type": "object",
                "properties": {"travel_date": {"type": "str"}}
            }))
            .unwrap();
            t
        };
        let tools = vec![temporal.clone(), temporal.clone()];
        let cfg = CurationConfig { skip_semantic: true, ..Default::default() };
        let (kept, report) = run_curation(tools, &cfg, None).unwrap();
        assert!(kept.is_empty());
        assert_eq!(report.stages[0].removed_count, 1, "duplicate removed by exact_dedup");
        assert_eq!(report.stages[1].removed_count, 1, "survivor removed by temporal_filter");
    }

    #[test]
    fn missing_embedder_aborts_with_partial_report() {
        let err = run_curation(pipeline_fixture(), &CurationConfig::default(), None).unwrap_err();
        match err {
            CurationError::EmbedderUnavailable { partial, .. } => {
                assert_eq!(partial.stages.len(), 3);
                partial.validate().unwrap();
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn curation_is_idempotent() {
        let cfg = CurationConfig::default();
        let embedder = fixture_embedder();
        let (once, _) = run_curation(pipeline_fixture(), &cfg, Some(&embedder)).unwrap();
        let (twice, report) = run_curation(once.clone(), &cfg, Some(&embedder)).unwrap();
        assert_eq!(once, twice);
        assert_eq!(report.stages.iter().map(|s| s.removed_count).sum::<usize>(), 0);
    }

    #[test]
    fn stages_only_ever_shrink_their_input() {
        let cfg = CurationConfig::default();
        let embedder = fixture_embedder();
        let (_, report) = run_curation(pipeline_fixture(), &cfg, Some(&embedder)).unwrap();
        for stage in &report.stages {
            assert!(stage.tools_out <= stage.tools_in);
        }
    }
}
