//! Macro-averaged evaluation: aligns predicted calls against gold
//! trajectories and reports SP / FP / SPA / FPA per structure bucket at turn
//! and conversation granularity.

mod align;
mod score;

pub use align::{align_calls, AlignedCall, Alignment};
pub use score::{
    aggregate, score_instance, BucketMetrics, Granularity, GranularityReport, InstanceScores,
};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::BufRead;
use thiserror::Error;

use crate::matching::MatchVerdict;
use crate::model::{classify_structure, parse_model_response, QaoaConversation};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("instance '{instance}' has an empty ground-truth call set")]
    EmptyGroundTruth { instance: String },
    #[error("instance '{instance}' mixes aggregation granularities")]
    MixedGranularity { instance: String },
    #[error("malformed prediction record{}: {detail}", line.map(|n| format!(" at line {n}")).unwrap_or_default())]
    MalformedPrediction { line: Option<usize>, detail: String },
    #[error("duplicate prediction for instance '{instance}' turn {turn}")]
    DuplicatePrediction { instance: String, turn: usize },
}

/// One line of a prediction file: the raw model response for one turn of one
/// instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub turn: usize,
    pub response: String,
}

/// Parses one prediction-file line.
pub fn parse_prediction_line(line: &str) -> Result<PredictionRecord, MetricsError> {
    serde_json::from_str(line.trim()).map_err(|e| MetricsError::MalformedPrediction {
        line: None,
        detail: e.to_string(),
    })
}

/// Prediction records keyed by (instance id, turn index).
#[derive(Debug, Default, Clone)]
pub struct PredictionSet {
    map: HashMap<(String, usize), String>,
}

impl PredictionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: PredictionRecord) -> Result<(), MetricsError> {
        let key = (record.id.clone(), record.turn);
        if self.map.contains_key(&key) {
            return Err(MetricsError::DuplicatePrediction {
                instance: record.id,
                turn: record.turn,
            });
        }
        self.map.insert(key, record.response);
        Ok(())
    }

    /// Reads a line-delimited prediction file. Blank lines are skipped.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, MetricsError> {
        let mut set = PredictionSet::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| MetricsError::MalformedPrediction {
                line: Some(lineno + 1),
                detail: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record = parse_prediction_line(&line).map_err(|e| match e {
                MetricsError::MalformedPrediction { detail, .. } => {
                    MetricsError::MalformedPrediction { line: Some(lineno + 1), detail }
                }
                other => other,
            })?;
            set.insert(record)?;
        }
        Ok(set)
    }

    pub fn get(&self, id: &str, turn: usize) -> Option<&str> {
        self.map.get(&(id.to_string(), turn)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Alignment diagnostics for one scored instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDiagnostics {
    pub instance_id: String,
    pub granularity: Granularity,
    pub scores: InstanceScores,
    /// Per prediction slot: predicted name (None for padding), consumed gold
    /// name, and the verdict.
    pub slots: Vec<SlotDiagnostics>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotDiagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    pub verdict: MatchVerdict,
}

/// The full evaluation report: both granularity views over the same
/// instances, plus bookkeeping about skipped and missing records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Free-form label of the candidate setting being evaluated
    /// (e.g. "hybrid20" or "gt").
    pub setting: String,
    pub semantic_threshold: f64,
    pub turn_level: GranularityReport,
    pub conversation_level: GranularityReport,
    /// Instances with no gold calls, excluded from scoring.
    pub skipped: Vec<String>,
    /// Instance-turns that had no prediction record and were scored as empty.
    pub missing_predictions: Vec<String>,
}

/// Everything `evaluate` produces: the report plus per-instance diagnostics.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricReport,
    pub diagnostics: Vec<InstanceDiagnostics>,
}

/// Scoring artifacts of a single conversation.
#[derive(Debug, Default)]
struct ConversationScored {
    turn_scores: Vec<InstanceScores>,
    conv_score: Option<InstanceScores>,
    diagnostics: Vec<InstanceDiagnostics>,
    skipped: Vec<String>,
    missing: Vec<String>,
}

fn score_conversation(
    conv: &QaoaConversation,
    predictions: &PredictionSet,
    threshold: f64,
) -> Result<ConversationScored, MetricsError> {
    let mut out = ConversationScored::default();
    let structure = classify_structure(conv);
    let turns = conv.turns();
    let mut conv_preds = Vec::new();
    let mut conv_golds = Vec::new();

    for (t, turn) in turns.iter().enumerate() {
        let golds: Vec<_> = turn.calls().into_iter().cloned().collect();
        let preds = match predictions.get(&conv.id, t) {
            Some(response) => parse_model_response(response).calls,
            None => {
                // Only turns that require calls count as missing.
                if !golds.is_empty() {
                    log::warn!("no prediction record for instance '{}' turn {t}", conv.id);
                    out.missing.push(format!("{}#t{t}", conv.id));
                }
                Vec::new()
            }
        };
        conv_preds.extend(preds.iter().cloned());
        conv_golds.extend(golds.iter().cloned());

        if golds.is_empty() {
            out.skipped.push(format!("{}#t{t}", conv.id));
            continue;
        }
        let id = format!("{}#t{t}", conv.id);
        let scores = score_instance(
            id.clone(),
            &preds,
            &golds,
            threshold,
            Granularity::Turn,
            structure.turns[t],
            conv.source.clone(),
        )?;
        out.diagnostics.push(diagnose(&scores, &preds, &golds, threshold));
        out.turn_scores.push(scores);
    }

    if conv_golds.is_empty() {
        out.skipped.push(conv.id.clone());
        return Ok(out);
    }
    let scores = score_instance(
        conv.id.clone(),
        &conv_preds,
        &conv_golds,
        threshold,
        Granularity::Conversation,
        structure.conversation,
        conv.source.clone(),
    )?;
    out.diagnostics.push(diagnose(&scores, &conv_preds, &conv_golds, threshold));
    out.conv_score = Some(scores);
    Ok(out)
}

fn fold_scored(
    scored: Vec<ConversationScored>,
    threshold: f64,
    setting: &str,
) -> Result<Evaluation, MetricsError> {
    let mut turn_scores = Vec::new();
    let mut conv_scores = Vec::new();
    let mut diagnostics = Vec::new();
    let mut skipped = Vec::new();
    let mut missing = Vec::new();
    for s in scored {
        turn_scores.extend(s.turn_scores);
        conv_scores.extend(s.conv_score);
        diagnostics.extend(s.diagnostics);
        skipped.extend(s.skipped);
        missing.extend(s.missing);
    }
    let report = MetricReport {
        setting: setting.to_string(),
        semantic_threshold: threshold,
        turn_level: aggregate(&turn_scores)?,
        conversation_level: aggregate(&conv_scores)?,
        skipped,
        missing_predictions: missing,
    };
    Ok(Evaluation { report, diagnostics })
}

/// Scores a dataset: turn-granularity instances are individual turns
/// (SH/MH buckets); conversation-granularity instances are whole
/// conversations with all turns' calls concatenated (ST/MT buckets).
pub fn bucket_metrics(
    conversations: &[QaoaConversation],
    predictions: &PredictionSet,
    threshold: f64,
    setting: &str,
) -> Result<Evaluation, MetricsError> {
    bucket_metrics_parallel(conversations, predictions, threshold, setting, 1)
}

/// [`bucket_metrics`] with instance scoring fanned out over `jobs` worker
/// threads. Instances are independent, and results are merged in dataset
/// order, so the outcome does not depend on the worker count.
pub fn bucket_metrics_parallel(
    conversations: &[QaoaConversation],
    predictions: &PredictionSet,
    threshold: f64,
    setting: &str,
    jobs: usize,
) -> Result<Evaluation, MetricsError> {
    let jobs = jobs.max(1).min(conversations.len().max(1));
    let scored: Vec<Result<ConversationScored, MetricsError>> = if jobs <= 1 {
        conversations.iter().map(|c| score_conversation(c, predictions, threshold)).collect()
    } else {
        let chunk_size = conversations.len().div_ceil(jobs);
        let mut chunk_results: Vec<Vec<Result<ConversationScored, MetricsError>>> =
            Vec::with_capacity(jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = conversations
                .chunks(chunk_size)
                .map(|chunk| {
                    scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|c| score_conversation(c, predictions, threshold))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for handle in handles {
                chunk_results.push(handle.join().expect("scoring worker panicked"));
            }
        });
        chunk_results.into_iter().flatten().collect()
    };
    let scored: Result<Vec<ConversationScored>, MetricsError> = scored.into_iter().collect();
    fold_scored(scored?, threshold, setting)
}

fn diagnose(
    scores: &InstanceScores,
    preds: &[crate::model::FunctionCall],
    golds: &[crate::model::FunctionCall],
    threshold: f64,
) -> InstanceDiagnostics {
    let alignment = align_calls(preds, golds, threshold);
    let slots = alignment
        .slots
        .iter()
        .map(|slot| SlotDiagnostics {
            predicted: slot.pred_index.map(|i| preds[i].name.clone()),
            gold: slot.gold_index.map(|j| golds[j].name.clone()),
            verdict: slot.verdict.clone(),
        })
        .collect();
    InstanceDiagnostics {
        instance_id: scores.instance_id.clone(),
        granularity: scores.granularity,
        scores: scores.clone(),
        slots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::DEFAULT_SEMANTIC_THRESHOLD;
    use crate::model::{Event, FunctionCall};
    use serde_json::json;

    fn conv(id: &str, turns: Vec<Vec<FunctionCall>>) -> QaoaConversation {
        let mut events = Vec::new();
        for (t, calls) in turns.iter().enumerate() {
            events.push(Event::Query(format!("query {t}")));
            for call in calls {
                events.push(Event::Action(call.clone()));
                events.push(Event::Observation(format!("obs {t}")));
            }
            events.push(Event::Answer(format!("answer {t}")));
        }
        QaoaConversation {
            id: id.to_string(),
            system_prompt: String::new(),
            candidates: Vec::new(),
            events,
            source: None,
        }
    }

    fn respond(calls: &[&FunctionCall]) -> String {
        calls
            .iter()
            .map(|c| format!("<tool_call>{}</tool_call>", serde_json::to_string(c).unwrap()))
            .collect()
    }

    #[test]
    fn turn_and_conversation_instances_bucket_separately() {
        // One 2-turn conversation: a 1-call turn and a 2-call turn.
        let f = FunctionCall::new("f").with_arg("a", json!(1));
        let g = FunctionCall::new("g");
        let h = FunctionCall::new("h");
        let c = conv("c0", vec![vec![f.clone()], vec![g.clone(), h.clone()]]);

        let mut preds = PredictionSet::new();
        preds
            .insert(PredictionRecord { id: "c0".to_string(), turn: 0, response: respond(&[&f]) })
            .unwrap();
        preds
            .insert(PredictionRecord {
                id: "c0".to_string(),
                turn: 1,
                response: respond(&[&g, &h]),
            })
            .unwrap();

        let eval =
            bucket_metrics(&[c], &preds, DEFAULT_SEMANTIC_THRESHOLD, "hybrid20").unwrap();
        let turn = &eval.report.turn_level;
        assert_eq!(turn.buckets["SH"].n, 1);
        assert_eq!(turn.buckets["MH"].n, 1);
        let conv_level = &eval.report.conversation_level;
        assert_eq!(conv_level.buckets["ST"].n, 0);
        assert_eq!(conv_level.buckets["MT"].n, 1);
        assert_eq!(conv_level.buckets["MT"].sp, Some(100.0));
    }

    #[test]
    fn missing_predictions_score_zero_and_are_logged() {
        let f = FunctionCall::new("f");
        let c = conv("c1", vec![vec![f]]);
        let eval = bucket_metrics(
            &[c],
            &PredictionSet::new(),
            DEFAULT_SEMANTIC_THRESHOLD,
            "hybrid20",
        )
        .unwrap();
        assert_eq!(eval.report.missing_predictions, vec!["c1#t0".to_string()]);
        assert_eq!(eval.report.turn_level.buckets["SH"].sp, Some(0.0));
    }

    #[test]
    fn empty_dataset_reports_absent_metrics() {
        let eval = bucket_metrics(
            &[],
            &PredictionSet::new(),
            DEFAULT_SEMANTIC_THRESHOLD,
            "hybrid20",
        )
        .unwrap();
        assert_eq!(eval.report.turn_level.buckets["SH"].n, 0);
        assert_eq!(eval.report.turn_level.buckets["SH"].sp, None);
    }

    #[test]
    fn callless_turns_are_skipped_not_scored() {
        let c = conv("c2", vec![vec![]]);
        let eval = bucket_metrics(
            &[c],
            &PredictionSet::new(),
            DEFAULT_SEMANTIC_THRESHOLD,
            "gt",
        )
        .unwrap();
        assert!(eval.report.skipped.contains(&"c2#t0".to_string()));
        assert!(eval.report.skipped.contains(&"c2".to_string()));
        assert_eq!(eval.report.turn_level.buckets["overall"].n, 0);
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let convs: Vec<QaoaConversation> = (0..7)
            .map(|i| {
                conv(
                    &format!("c{i}"),
                    vec![vec![FunctionCall::new("f").with_arg("a", json!(i))]],
                )
            })
            .collect();
        let mut preds = PredictionSet::new();
        for (i, c) in convs.iter().enumerate() {
            if i % 2 == 0 {
                let call = FunctionCall::new("f").with_arg("a", json!(i));
                preds
                    .insert(PredictionRecord {
                        id: c.id.clone(),
                        turn: 0,
                        response: respond(&[&call]),
                    })
                    .unwrap();
            }
        }
        let sequential =
            bucket_metrics_parallel(&convs, &preds, DEFAULT_SEMANTIC_THRESHOLD, "x", 1).unwrap();
        let parallel =
            bucket_metrics_parallel(&convs, &preds, DEFAULT_SEMANTIC_THRESHOLD, "x", 3).unwrap();
        assert_eq!(sequential.report, parallel.report);
        assert_eq!(sequential.diagnostics.len(), parallel.diagnostics.len());
    }

    #[test]
    fn duplicate_prediction_records_are_rejected() {
        let mut set = PredictionSet::new();
        let rec = PredictionRecord { id: "x".to_string(), turn: 0, response: "r".to_string() };
        set.insert(rec.clone()).unwrap();
        assert!(matches!(
            set.insert(rec),
            Err(MetricsError::DuplicatePrediction { .. })
        ));
    }

    #[test]
    fn prediction_lines_parse_and_report_errors() {
        let rec = parse_prediction_line(r#"{"id": "a", "turn": 2, "response": "<answer>x</answer>"}"#)
            .unwrap();
        assert_eq!(rec.turn, 2);
        assert!(parse_prediction_line("nonsense").is_err());

        let file = "{\"id\": \"a\", \"turn\": 0, \"response\": \"r\"}\n\nbroken\n";
        match PredictionSet::from_reader(file.as_bytes()) {
            Err(MetricsError::MalformedPrediction { line: Some(3), .. }) => {}
            other => panic!("expected line-3 error, got {other:?}"),
        }
    }
}
