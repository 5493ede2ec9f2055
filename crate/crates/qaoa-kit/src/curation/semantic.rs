//! Embedding-based removal of functionally redundant tools.
//!
//! Each tool is embedded from `name: description`; pairs with cosine
//! similarity strictly above the threshold are duplicates. Train/test copies
//! are retained over external ones, then the earliest in input order.
//! Pairwise comparison is exact; pool sizes here are far below the scale
//! where approximate neighbors would pay off.

use crate::model::ToolSpec;
use crate::providers::{cosine, EmbeddingProvider, ProviderError};

use super::{RemovedTool, StageReport};

pub fn semantic_dedup(
    tools: &[ToolSpec],
    embedder: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<(Vec<ToolSpec>, StageReport), ProviderError> {
    let tools_in = tools.len();
    if tools.is_empty() {
        return Ok((Vec::new(), StageReport::new("semantic_dedup", 0, Vec::new(), 0)));
    }
    let texts: Vec<String> = tools.iter().map(ToolSpec::embedding_text).collect();
    let batch = embedder.embed(&texts)?;
    let vectors = &batch.vectors;

    let constructed: Vec<bool> = tools
        .iter()
        .map(|t| t.source.is_some_and(|s| s.is_constructed()))
        .collect();

    // Two passes in input order: first the train/test tools (so externals
    // can never displace them), then the rest. A tool is dropped when it
    // duplicates any already-retained tool.
    let mut retained: Vec<usize> = Vec::new();
    let mut removal: Vec<Option<(usize, f64)>> = vec![None; tools.len()];
    for pass_constructed in [true, false] {
        for i in 0..tools.len() {
            if constructed[i] != pass_constructed || removal[i].is_some() {
                continue;
            }
            let duplicate_of = retained.iter().copied().find_map(|j| {
                let sim = similarity(&vectors[i], &vectors[j]);
                (sim > threshold).then_some((j, sim))
            });
            match duplicate_of {
                Some(hit) => removal[i] = Some(hit),
                None => retained.push(i),
            }
        }
    }
    retained.sort_unstable();

    let mut kept = Vec::with_capacity(retained.len());
    let mut removed = Vec::new();
    for (i, tool) in tools.iter().enumerate() {
        match removal[i] {
            None => kept.push(tool.clone()),
            Some((j, sim)) => removed.push(RemovedTool {
                name: tool.name.clone(),
                reason: format!(
                    "cosine similarity {sim:.4} with '{}' exceeds {threshold}",
                    tools[j].name
                ),
            }),
        }
    }
    let report = StageReport::new("semantic_dedup", tools_in, removed, kept.len());
    Ok((kept, report))
}

/// Similarity with degenerate vectors pinned to 0 rather than erroring; a
/// zero embedding cannot testify to duplication.
fn similarity(u: &[f64], v: &[f64]) -> f64 {
    cosine(u, v).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::mock::{FixedEmbedder, HashEmbedder};
    use serde_json::json;
    use std::collections::HashMap;

    fn tool(name: &str, description: &str, source: Option<&str>) -> ToolSpec {
        let mut v = json!({"name": name, "description": description});
        if let Some(s) = source {
            v["source"] = json!(s);
        }
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn identical_text_pairs_are_duplicates_at_the_default_threshold() {
        let tools = vec![tool("a", "same", None), tool("a", "same", None)];
        let (kept, report) =
            semantic_dedup(&tools, &HashEmbedder::default(), 0.9).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(report.removed_count, 1);
        assert!(report.removed[0].reason.contains("1.0000"));
    }

    #[test]
    fn constructed_copy_survives_regardless_of_position() {
        let mut map = HashMap::new();
        map.insert("ext: finds".to_string(), vec![1.0, 0.0]);
        map.insert("kept: finds".to_string(), vec![1.0, 0.0]);
        let embedder = FixedEmbedder::new(map);
        let tools = vec![tool("ext", "finds", Some("ret")), tool("kept", "finds", Some("test"))];
        let (kept, _) = semantic_dedup(&tools, &embedder, 0.9).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].name, "kept");
    }

    #[test]
    fn orthogonal_embeddings_remove_nothing() {
        let mut map = HashMap::new();
        map.insert("a: x".to_string(), vec![1.0, 0.0, 0.0]);
        map.insert("b: y".to_string(), vec![0.0, 1.0, 0.0]);
        map.insert("c: z".to_string(), vec![0.0, 0.0, 1.0]);
        let embedder = FixedEmbedder::new(map);
        let tools = vec![tool("a", "x", None), tool("b", "y", None), tool("c", "z", None)];
        let (kept, report) = semantic_dedup(&tools, &embedder, 0.9).unwrap();
        assert_eq!(kept.len(), 3);
        assert_eq!(report.removed_count, 0);
    }

    #[test]
    fn threshold_one_removes_nothing_beyond_exact_clamps() {
        // Strictly-greater comparison: nothing exceeds 1.0.
        let tools = vec![tool("a", "same", None), tool("a", "same", None)];
        let (kept, _) = semantic_dedup(&tools, &HashEmbedder::default(), 1.0).unwrap();
        assert_eq!(kept.len(), 2);
    }
}
