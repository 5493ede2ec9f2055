//! Generation tasks and tool-subset sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;
use std::sync::Mutex;

use crate::model::ToolSpec;

use super::SynthesisError;

/// Subset size for multi-turn tasks.
pub const MULTI_TURN_SUBSET: usize = 10;
/// Multi-hop subset bounds.
pub const MULTI_HOP_MIN: usize = 2;
pub const MULTI_HOP_MAX: usize = 5;
/// Admissible turn counts for multi-turn episodes.
pub const TURN_CHOICES: [usize; 3] = [2, 3, 4];
/// Generation attempts before a tool is excluded.
pub const DEFAULT_MAX_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SingleHop,
    MultiHopSerial,
    MultiHopParallel,
    MultiTurn,
}

impl Scenario {
    pub fn slug(&self) -> &'static str {
        match self {
            Scenario::SingleHop => "sh",
            Scenario::MultiHopSerial => "mh-serial",
            Scenario::MultiHopParallel => "mh-parallel",
            Scenario::MultiTurn => "mt",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sh" | "single-hop" | "single_hop" => Ok(Scenario::SingleHop),
            "mh-serial" | "multi-hop-serial" | "multi_hop_serial" => Ok(Scenario::MultiHopSerial),
            "mh-parallel" | "multi-hop-parallel" | "multi_hop_parallel" => {
                Ok(Scenario::MultiHopParallel)
            }
            "mt" | "multi-turn" | "multi_turn" => Ok(Scenario::MultiTurn),
            other => Err(format!("unknown scenario '{other}'")),
        }
    }
}

/// One unit of synthesis work: a scenario over a sampled tool subset.
#[derive(Debug, Clone)]
pub struct GenerationTask {
    pub id: String,
    pub scenario: Scenario,
    /// The sampled subset S.
    pub tools: Vec<ToolSpec>,
    /// Steps K for multi-hop tasks. Defaults to one call per sampled tool.
    pub steps: usize,
    /// Turns T for multi-turn tasks.
    pub turns: usize,
    pub rng_seed: u64,
    pub max_retries: usize,
}

impl GenerationTask {
    pub fn new(
        id: impl Into<String>,
        scenario: Scenario,
        tools: Vec<ToolSpec>,
        rng_seed: u64,
    ) -> Self {
        let steps = tools.len().max(MULTI_HOP_MIN);
        GenerationTask {
            id: id.into(),
            scenario,
            tools,
            steps,
            turns: TURN_CHOICES[0],
            rng_seed,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }

    pub fn with_turns(mut self, turns: usize) -> Self {
        self.turns = turns;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        let invalid = |detail: String| Err(SynthesisError::InvalidTask { detail });
        match self.scenario {
            Scenario::SingleHop => {
                if self.tools.len() != 1 {
                    return invalid(format!("single-hop needs |S| = 1, got {}", self.tools.len()));
                }
            }
            Scenario::MultiHopSerial | Scenario::MultiHopParallel => {
                if !(MULTI_HOP_MIN..=MULTI_HOP_MAX).contains(&self.tools.len()) {
                    return invalid(format!(
                        "multi-hop needs |S| in [{MULTI_HOP_MIN},{MULTI_HOP_MAX}], got {}",
                        self.tools.len()
                    ));
                }
                if self.steps < MULTI_HOP_MIN {
                    return invalid(format!("multi-hop needs K >= {MULTI_HOP_MIN}"));
                }
                if self.scenario == Scenario::MultiHopParallel && self.steps > self.tools.len() {
                    return invalid(format!(
                        "parallel multi-hop needs K <= |S| (distinct tools per step), got K={} |S|={}",
                        self.steps,
                        self.tools.len()
                    ));
                }
            }
            Scenario::MultiTurn => {
                if self.tools.len() != MULTI_TURN_SUBSET {
                    return invalid(format!(
                        "multi-turn needs |S| = {MULTI_TURN_SUBSET}, got {}",
                        self.tools.len()
                    ));
                }
                if !TURN_CHOICES.contains(&self.turns) {
                    return invalid(format!("multi-turn needs T in {TURN_CHOICES:?}, got {}", self.turns));
                }
            }
        }
        Ok(())
    }
}

/// Shared usage counter for usage-balanced multi-turn sampling. Draw weights
/// fall as `1 / (1 + uses)`, so coverage spreads across the pool over a
/// batch. Updates are atomic per draw.
#[derive(Debug, Default)]
pub struct UsageCounter {
    counts: Mutex<HashMap<String, u64>>,
}

impl UsageCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, name: &str) {
        *self.counts.lock().expect("usage lock").entry(name.to_string()).or_insert(0) += 1;
    }

    pub fn count(&self, name: &str) -> u64 {
        self.counts.lock().expect("usage lock").get(name).copied().unwrap_or(0)
    }

    fn weight(&self, name: &str) -> f64 {
        1.0 / (1.0 + self.count(name) as f64)
    }
}

/// Samples the scenario's tool subset S from the pool.
///
/// Single-hop draws one tool uniformly. Multi-hop draws a domain-constrained
/// subset: a target size in `[2,5]`, then a domain with that many labeled
/// tools (falling back to smaller targets when necessary). Multi-turn draws
/// ten tools weighted inversely by the shared usage counter and records
/// every drawn tool.
pub fn sample_tool_subset(
    pool: &[ToolSpec],
    scenario: Scenario,
    rng_seed: u64,
    usage: &UsageCounter,
) -> Result<Vec<ToolSpec>, SynthesisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    match scenario {
        Scenario::SingleHop => {
            if pool.is_empty() {
                return Err(SynthesisError::PoolTooSmall { needed: 1, available: 0 });
            }
            let i = rng.gen_range(0..pool.len());
            Ok(vec![pool[i].clone()])
        }
        Scenario::MultiHopSerial | Scenario::MultiHopParallel => {
            let mut by_domain: BTreeMap<String, Vec<&ToolSpec>> = BTreeMap::new();
            for tool in pool {
                if let Some(domain) = tool.domain {
                    by_domain.entry(domain.to_string()).or_default().push(tool);
                }
            }
            let largest = by_domain.values().map(Vec::len).max().unwrap_or(0);
            if largest < MULTI_HOP_MIN {
                return Err(SynthesisError::NoDomainWithEnoughTools { needed: MULTI_HOP_MIN });
            }
            let target = rng.gen_range(MULTI_HOP_MIN..=MULTI_HOP_MAX).min(largest);
            let eligible: Vec<&String> =
                by_domain.iter().filter(|(_, v)| v.len() >= target).map(|(k, _)| k).collect();
            let domain = eligible[rng.gen_range(0..eligible.len())].clone();
            let members = &by_domain[&domain];
            let mut indices: Vec<usize> = (0..members.len()).collect();
            // Fisher-Yates prefix: the first `target` positions.
            for i in 0..target {
                let j = rng.gen_range(i..indices.len());
                indices.swap(i, j);
            }
            Ok(indices[..target].iter().map(|&i| members[i].clone()).collect())
        }
        Scenario::MultiTurn => {
            if pool.len() < MULTI_TURN_SUBSET {
                return Err(SynthesisError::PoolTooSmall {
                    needed: MULTI_TURN_SUBSET,
                    available: pool.len(),
                });
            }
            let mut remaining: Vec<&ToolSpec> = pool.iter().collect();
            let mut chosen = Vec::with_capacity(MULTI_TURN_SUBSET);
            for _ in 0..MULTI_TURN_SUBSET {
                let weights: Vec<f64> =
                    remaining.iter().map(|t| usage.weight(&t.name)).collect();
                let total: f64 = weights.iter().sum();
                let mut pick = rng.gen::<f64>() * total;
                let mut index = remaining.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if pick < *w {
                        index = i;
                        break;
                    }
                    pick -= w;
                }
                let tool = remaining.remove(index);
                usage.record(&tool.name);
                chosen.push(tool.clone());
            }
            Ok(chosen)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn tool(name: &str, domain: Option<&str>) -> ToolSpec {
        let mut v = json!({"name": name, "description": format!("does {name}")});
        if let Some(d) = domain {
            v["domain"] = json!(d);
        }
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn single_hop_draws_exactly_one_tool() {
        let pool = vec![tool("a", None), tool("b", None)];
        let usage = UsageCounter::new();
        let s = sample_tool_subset(&pool, Scenario::SingleHop, 3, &usage).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn multi_hop_subsets_share_one_domain() {
        let mut pool: Vec<ToolSpec> =
            (0..5).map(|i| tool(&format!("fin{i}"), Some("finance"))).collect();
        pool.push(tool("odd", Some("travel")));
        pool.push(tool("unlabeled", None));
        let usage = UsageCounter::new();
        for seed in 0..20 {
            let s = sample_tool_subset(&pool, Scenario::MultiHopSerial, seed, &usage).unwrap();
            assert!((MULTI_HOP_MIN..=MULTI_HOP_MAX).contains(&s.len()));
            // "travel" has one tool, so every subset must be finance-only.
            assert!(s.iter().all(|t| t.domain.map(|d| d.to_string()) == Some("finance".into())));
        }
    }

    #[test]
    fn multi_hop_requires_a_populated_domain() {
        let pool = vec![tool("a", Some("finance")), tool("b", Some("travel"))];
        let usage = UsageCounter::new();
        assert!(matches!(
            sample_tool_subset(&pool, Scenario::MultiHopParallel, 1, &usage),
            Err(SynthesisError::NoDomainWithEnoughTools { .. })
        ));
    }

    #[test]
    fn multi_turn_draws_lean_away_from_used_tools() {
        let pool: Vec<ToolSpec> = (0..MULTI_TURN_SUBSET * 2)
            .map(|i| tool(&format!("t{i:02}"), None))
            .collect();
        let usage = UsageCounter::new();
        let first = sample_tool_subset(&pool, Scenario::MultiTurn, 11, &usage).unwrap();
        assert_eq!(first.len(), MULTI_TURN_SUBSET);
        for t in &first {
            assert_eq!(usage.count(&t.name), 1, "counter records each draw");
        }
        let second = sample_tool_subset(&pool, Scenario::MultiTurn, 12, &usage).unwrap();
        // The ten unused tools all carry double weight, so the second draw
        // must pick up a majority of them.
        let fresh = second.iter().filter(|t| first.iter().all(|f| f.name != t.name)).count();
        assert!(fresh >= MULTI_TURN_SUBSET / 2, "fresh tools drawn: {fresh}");
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let pool: Vec<ToolSpec> = (0..30).map(|i| tool(&format!("t{i:02}"), None)).collect();
        let a = sample_tool_subset(&pool, Scenario::MultiTurn, 9, &UsageCounter::new()).unwrap();
        let b = sample_tool_subset(&pool, Scenario::MultiTurn, 9, &UsageCounter::new()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn task_validation_enforces_scenario_shapes() {
        let one = vec![tool("a", None)];
        let ten: Vec<ToolSpec> = (0..10).map(|i| tool(&format!("t{i}"), None)).collect();
        assert!(GenerationTask::new("x", Scenario::SingleHop, one.clone(), 0).validate().is_ok());
        assert!(GenerationTask::new("x", Scenario::SingleHop, ten.clone(), 0).validate().is_err());
        assert!(GenerationTask::new("x", Scenario::MultiTurn, ten.clone(), 0)
            .with_turns(5)
            .validate()
            .is_err());
        assert!(GenerationTask::new("x", Scenario::MultiTurn, ten.clone(), 0)
            .with_turns(3)
            .validate()
            .is_ok());
        let three: Vec<ToolSpec> = (0..3).map(|i| tool(&format!("t{i}"), None)).collect();
        assert!(GenerationTask::new("x", Scenario::MultiHopParallel, three.clone(), 0)
            .with_steps(4)
            .validate()
            .is_err());
        assert!(GenerationTask::new("x", Scenario::MultiHopSerial, three, 0)
            .with_steps(4)
            .validate()
            .is_ok());
    }
}
