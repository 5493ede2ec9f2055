//! Per-instance scoring and macro-averaged aggregation.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::model::{HopClass, StructureLabel, TurnClass};

use super::align::align_calls;
use super::MetricsError;
use crate::model::FunctionCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Turn,
    Conversation,
}

/// Indicator counts for one scored instance (a turn or a conversation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScores {
    pub instance_id: String,
    pub granularity: Granularity,
    pub bucket: StructureLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// |P| after null padding: `max(|P|, |G|)`.
    pub p_size: usize,
    /// Real predictions before padding.
    pub p_unpadded: usize,
    pub g_size: usize,
    pub n_name: usize,
    pub n_strict: usize,
    pub n_flex: usize,
    pub sp_indicator: u8,
}

impl InstanceScores {
    pub fn fp_fraction(&self) -> f64 {
        self.n_name as f64 / self.p_size as f64
    }

    pub fn spa_fraction(&self) -> f64 {
        self.n_strict as f64 / self.p_size as f64
    }

    pub fn fpa_fraction(&self) -> f64 {
        self.n_flex as f64 / self.p_size as f64
    }
}

/// Scores one instance: aligns predictions to gold calls and derives the
/// four indicator counts. The gold set must be non-empty.
pub fn score_instance(
    instance_id: impl Into<String>,
    preds: &[FunctionCall],
    golds: &[FunctionCall],
    threshold: f64,
    granularity: Granularity,
    bucket: StructureLabel,
    source: Option<String>,
) -> Result<InstanceScores, MetricsError> {
    if golds.is_empty() {
        return Err(MetricsError::EmptyGroundTruth { instance: instance_id.into() });
    }
    let alignment = align_calls(preds, golds, threshold);
    let n_name = alignment.n_name();
    // The all-or-nothing selection indicator: as many predictions as gold
    // calls, no padding, and every prediction name-matched.
    let sp = alignment.p_unpadded == alignment.g_size && n_name == alignment.p_unpadded;
    Ok(InstanceScores {
        instance_id: instance_id.into(),
        granularity,
        bucket,
        source,
        p_size: alignment.p_size,
        p_unpadded: alignment.p_unpadded,
        g_size: alignment.g_size,
        n_name,
        n_strict: alignment.n_strict(),
        n_flex: alignment.n_flex(),
        sp_indicator: u8::from(sp),
    })
}

/// Macro-averaged metrics for one bucket, as percentages rounded half-up to
/// one decimal, alongside the unrounded fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BucketMetrics {
    pub n: usize,
    pub sp: Option<f64>,
    pub fp: Option<f64>,
    pub spa: Option<f64>,
    pub fpa: Option<f64>,
    pub raw_sp: Option<f64>,
    pub raw_fp: Option<f64>,
    pub raw_spa: Option<f64>,
    pub raw_fpa: Option<f64>,
}

fn percent(frac: f64) -> f64 {
    (frac * 1000.0 + 0.5).floor() / 10.0
}

impl BucketMetrics {
    fn from_scores(scores: &[&InstanceScores]) -> BucketMetrics {
        let n = scores.len();
        if n == 0 {
            // An empty bucket reports absent metrics, not zeros.
            return BucketMetrics::default();
        }
        let mean = |f: &dyn Fn(&InstanceScores) -> f64| -> f64 {
            scores.iter().map(|s| f(s)).sum::<f64>() / n as f64
        };
        let raw_sp = mean(&|s| f64::from(s.sp_indicator));
        let raw_fp = mean(&InstanceScores::fp_fraction);
        let raw_spa = mean(&InstanceScores::spa_fraction);
        let raw_fpa = mean(&InstanceScores::fpa_fraction);
        BucketMetrics {
            n,
            sp: Some(percent(raw_sp)),
            fp: Some(percent(raw_fp)),
            spa: Some(percent(raw_spa)),
            fpa: Some(percent(raw_fpa)),
            raw_sp: Some(raw_sp),
            raw_fp: Some(raw_fp),
            raw_spa: Some(raw_spa),
            raw_fpa: Some(raw_fpa),
        }
    }
}

/// Aggregated metrics at one granularity: structure buckets, the overall
/// row, and a per-source breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GranularityReport {
    pub granularity: Granularity,
    pub buckets: IndexMap<String, BucketMetrics>,
    pub per_source: BTreeMap<String, BucketMetrics>,
}

/// Macro-averages instance scores. All scores must share one granularity;
/// turn instances bucket into SH/MH, conversation instances into ST/MT.
pub fn aggregate(scores: &[InstanceScores]) -> Result<GranularityReport, MetricsError> {
    let granularity = scores.first().map(|s| s.granularity);
    if let Some(g) = granularity {
        if let Some(bad) = scores.iter().find(|s| s.granularity != g) {
            return Err(MetricsError::MixedGranularity {
                instance: bad.instance_id.clone(),
            });
        }
    }
    let granularity = granularity.unwrap_or(Granularity::Turn);

    let bucket_names: [&str; 2] = match granularity {
        Granularity::Turn => ["SH", "MH"],
        Granularity::Conversation => ["ST", "MT"],
    };
    let key = |s: &InstanceScores| -> &'static str {
        match granularity {
            Granularity::Turn => match s.bucket.hop_class {
                HopClass::SingleHop => "SH",
                HopClass::MultiHop => "MH",
            },
            Granularity::Conversation => match s.bucket.turn_class {
                TurnClass::SingleTurn => "ST",
                TurnClass::MultiTurn => "MT",
            },
        }
    };

    let mut buckets = IndexMap::new();
    for name in bucket_names {
        let selected: Vec<&InstanceScores> =
            scores.iter().filter(|s| key(s) == name).collect();
        buckets.insert(name.to_string(), BucketMetrics::from_scores(&selected));
    }
    let all: Vec<&InstanceScores> = scores.iter().collect();
    buckets.insert("overall".to_string(), BucketMetrics::from_scores(&all));

    let mut per_source: BTreeMap<String, BucketMetrics> = BTreeMap::new();
    let mut sources: Vec<String> = scores
        .iter()
        .map(|s| s.source.clone().unwrap_or_else(|| "unlabeled".to_string()))
        .collect();
    sources.sort();
    sources.dedup();
    for source in sources {
        let selected: Vec<&InstanceScores> = scores
            .iter()
            .filter(|s| s.source.as_deref().unwrap_or("unlabeled") == source)
            .collect();
        per_source.insert(source, BucketMetrics::from_scores(&selected));
    }

    Ok(GranularityReport { granularity, buckets, per_source })
}
