//! Deterministic offline providers.
//!
//! [`ScriptedChat`] replays a fixed transcript (programmatic or loaded from
//! a fixture file). [`SimulatedChat`] is a seeded rule-based generator that
//! reads the machine-readable `<task-context>` block embedded in the
//! synthesis prompts and fabricates schema-conforming trajectories, so the
//! whole pipeline runs end-to-end with no network. [`HashEmbedder`] hashes
//! tokens onto a fixed basis: identical texts always get identical vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use std::collections::{HashMap, VecDeque};
use std::io::BufRead;
use std::path::Path;
use std::sync::Mutex;

use crate::model::ToolSpec;

use super::{
    ChatProvider, ChatRequest, ChatResponse, EmbeddingBatch, EmbeddingProvider, FinishStatus,
    ProviderError,
};

/// Marker tags for the machine-readable context block inside prompts.
pub const TASK_CONTEXT_OPEN: &str = "<task-context>";
pub const TASK_CONTEXT_CLOSE: &str = "</task-context>";

// ---------------------------------------------------------------------------
// ScriptedChat
// ---------------------------------------------------------------------------

/// Replays a scripted transcript in order, recording every request.
pub struct ScriptedChat {
    responses: Mutex<VecDeque<String>>,
    requests: Mutex<Vec<ChatRequest>>,
    total: usize,
}

impl ScriptedChat {
    pub fn from_responses<S: Into<String>>(responses: Vec<S>) -> Self {
        let responses: VecDeque<String> = responses.into_iter().map(Into::into).collect();
        let total = responses.len();
        ScriptedChat { responses: Mutex::new(responses), requests: Mutex::new(Vec::new()), total }
    }

    /// Loads a transcript fixture: one `{"response": "..."}` object per line.
    pub fn from_transcript_file(path: &Path) -> Result<Self, ProviderError> {
        #[derive(serde::Deserialize)]
        struct Line {
            response: String,
        }
        let file = std::fs::File::open(path)
            .map_err(|e| ProviderError::Transport(format!("{}: {e}", path.display())))?;
        let mut responses = Vec::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| ProviderError::Transport(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|e| {
                ProviderError::Malformed(format!(
                    "{} line {}: {e}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            responses.push(parsed.response);
        }
        Ok(ScriptedChat::from_responses(responses))
    }

    /// Requests seen so far, in order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().expect("requests lock").clone()
    }

    pub fn served(&self) -> usize {
        self.total - self.responses.lock().expect("responses lock").len()
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().expect("responses lock").len()
    }
}

impl ChatProvider for ScriptedChat {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        if request.is_empty() {
            return Err(ProviderError::EmptyRequest);
        }
        self.requests.lock().expect("requests lock").push(request.clone());
        match self.responses.lock().expect("responses lock").pop_front() {
            Some(text) => Ok(ChatResponse { text, finish: FinishStatus::Stop, retries: 0 }),
            None => Err(ProviderError::ScriptExhausted(self.total)),
        }
    }
}

// ---------------------------------------------------------------------------
// SimulatedChat
// ---------------------------------------------------------------------------

const WORDS: [&str; 20] = [
    "amber", "basalt", "cedar", "delta", "ember", "falcon", "garnet", "harbor", "indigo",
    "juniper", "krypton", "lumen", "meadow", "nickel", "onyx", "pioneer", "quartz", "russet",
    "summit", "topaz",
];

const ID_PREFIXES: [&str; 5] = ["REF", "TXN", "ORD", "SID", "REC"];

/// Extracts the last `<task-context>` block from a request's messages.
fn task_context(request: &ChatRequest) -> Result<Value, ProviderError> {
    let joined: String = request
        .messages
        .iter()
        .map(|m| m.content.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let open = joined
        .rfind(TASK_CONTEXT_OPEN)
        .ok_or_else(|| ProviderError::Malformed("prompt carries no task context".to_string()))?;
    let rest = &joined[open + TASK_CONTEXT_OPEN.len()..];
    let close = rest
        .find(TASK_CONTEXT_CLOSE)
        .ok_or_else(|| ProviderError::Malformed("unterminated task context".to_string()))?;
    serde_json::from_str(rest[..close].trim())
        .map_err(|e| ProviderError::Malformed(format!("bad task context: {e}")))
}

/// Seeded rule-based generator standing in for the trajectory model and the
/// rubric judge. Responses are a pure function of the seed and the sequence
/// of requests.
pub struct SimulatedChat {
    rng: Mutex<ChaCha8Rng>,
}

impl SimulatedChat {
    pub fn seeded(seed: u64) -> Self {
        SimulatedChat { rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)) }
    }

    fn word(rng: &mut ChaCha8Rng) -> &'static str {
        WORDS[rng.gen_range(0..WORDS.len())]
    }

    fn ident(rng: &mut ChaCha8Rng) -> String {
        let prefix = ID_PREFIXES[rng.gen_range(0..ID_PREFIXES.len())];
        format!("{prefix}{:05}", rng.gen_range(10000..100000u32))
    }

    /// Fabricates arguments for a tool: every required parameter (or the
    /// first declared one when nothing is required), typed per the schema.
    /// `inject` is placed into the first string-typed parameter, which
    /// serial and multi-turn scenarios rely on.
    fn fabricate_args(
        rng: &mut ChaCha8Rng,
        tool: &ToolSpec,
        inject: Option<&str>,
    ) -> Map<String, Value> {
        let mut args = Map::new();
        let Some(schema) = &tool.input_schema else { return args };
        let Some(props) = &schema.properties else { return args };
        let mut keys: Vec<String> = schema.required.clone();
        if keys.is_empty() {
            if let Some(first) = props.keys().next() {
                keys.push(first.clone());
            }
        }
        if inject.is_some() {
            let has_string_key = keys.iter().any(|k| {
                props.get(k).and_then(|p| p.value_type.as_deref()).map(is_string_type)
                    == Some(true)
            });
            if !has_string_key {
                if let Some(extra) = props.iter().find(|(k, p)| {
                    !keys.contains(k) && p.value_type.as_deref().map(is_string_type) == Some(true)
                }) {
                    keys.push(extra.0.clone());
                }
            }
        }
        let mut pending = inject;
        for key in keys {
            let value_type =
                props.get(&key).and_then(|p| p.value_type.as_deref()).unwrap_or("string");
            let value = if is_string_type(value_type) && pending.is_some() {
                Value::String(pending.take().unwrap().to_string())
            } else {
                match value_type {
                    t if is_string_type(t) => {
                        json!(format!("{} {}", Self::word(rng), Self::word(rng)))
                    }
                    "int" | "integer" => json!(rng.gen_range(1..=50)),
                    "number" | "float" | "double" => json!(rng.gen_range(1..=50)),
                    "bool" | "boolean" => json!(rng.gen_bool(0.5)),
                    "array" | "list" => json!([Self::word(rng)]),
                    "object" | "dict" => json!({"note": Self::word(rng)}),
                    _ => json!(Self::word(rng)),
                }
            };
            args.insert(key, value);
        }
        args
    }

    fn observation(rng: &mut ChaCha8Rng) -> (String, String) {
        let id = Self::ident(rng);
        let obs = json!({"ref_id": id, "status": "ok", "detail": Self::word(rng)}).to_string();
        (obs, id)
    }

    /// Scalar argument values that must be quoted in a grounded query.
    fn groundable_values(args: &Map<String, Value>) -> Vec<String> {
        args.values()
            .filter_map(|v| match v {
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => Some(n.to_string()),
                _ => None,
            })
            .collect()
    }

    fn single_hop(rng: &mut ChaCha8Rng, tool: &ToolSpec) -> Value {
        let args = Self::fabricate_args(rng, tool, None);
        let values = Self::groundable_values(&args);
        let query = format!(
            "I need the following handled: {}. Please take care of {}.",
            tool.description.trim_end_matches('.'),
            if values.is_empty() { Self::word(rng).to_string() } else { values.join(" and ") },
        );
        let (observation, id) = Self::observation(rng);
        json!({
            "query": query,
            "call": {"name": tool.name, "arguments": args},
            "observation": observation,
            "answer": format!("All done, your reference is {id}."),
        })
    }

    fn multi_hop_serial(rng: &mut ChaCha8Rng, ctx: &Value) -> Result<Value, ProviderError> {
        let step = ctx["step"].as_u64().unwrap_or(1) as usize;
        let steps = ctx["steps"].as_u64().unwrap_or(2) as usize;
        let tools: Vec<ToolSpec> = parse_tools(ctx)?;
        if tools.is_empty() {
            return Err(ProviderError::Malformed("no tools in context".to_string()));
        }
        let tool = &tools[(step - 1) % tools.len()];
        let inherited = ctx["history"]
            .as_array()
            .and_then(|h| h.last())
            .and_then(|entry| entry["observation"].as_str())
            .and_then(|obs| {
                serde_json::from_str::<Value>(obs)
                    .ok()
                    .and_then(|v| v["ref_id"].as_str().map(str::to_string))
            });
        let args = Self::fabricate_args(rng, tool, inherited.as_deref());
        let (observation, id) = Self::observation(rng);
        let mut out = json!({
            "call": {"name": tool.name, "arguments": args},
            "observation": observation,
        });
        if step == 1 {
            out["query"] = json!(format!(
                "Work through a {} workflow step by step, carrying each reference forward.",
                Self::word(rng)
            ));
        }
        if step == steps {
            out["answer"] = json!(format!("Workflow complete; final reference {id}."));
        }
        Ok(out)
    }

    fn multi_hop_parallel(rng: &mut ChaCha8Rng, ctx: &Value) -> Result<Value, ProviderError> {
        let steps = ctx["steps"].as_u64().unwrap_or(2) as usize;
        let tools: Vec<ToolSpec> = parse_tools(ctx)?;
        if tools.len() < steps {
            return Err(ProviderError::Malformed("not enough tools in context".to_string()));
        }
        let mut calls = Vec::new();
        let mut observations = Vec::new();
        let mut grounded = Vec::new();
        for tool in tools.iter().take(steps) {
            let args = Self::fabricate_args(rng, tool, None);
            grounded.extend(Self::groundable_values(&args));
            calls.push(json!({"name": tool.name, "arguments": args}));
            observations.push(Self::observation(rng).0);
        }
        let query = format!(
            "Please handle these independent items in one go: {}.",
            grounded.join(", ")
        );
        Ok(json!({
            "query": query,
            "calls": calls,
            "observations": observations,
            "answer": "Every independent item has been processed.",
        }))
    }

    fn storyline(rng: &mut ChaCha8Rng, ctx: &Value) -> Value {
        let turns = ctx["turns"].as_u64().unwrap_or(2);
        json!({
            "storyline": format!(
                "A customer at {} {} works through {turns} connected requests, quoting the \
                 reference returned by each step in the next one.",
                Self::word(rng),
                Self::word(rng),
            )
        })
    }

    fn turn(rng: &mut ChaCha8Rng, ctx: &Value) -> Result<Value, ProviderError> {
        let turn = ctx["turn"].as_u64().unwrap_or(1) as usize;
        let tools: Vec<ToolSpec> = parse_tools(ctx)?;
        if tools.is_empty() {
            return Err(ProviderError::Malformed("no tools in context".to_string()));
        }
        let tool = &tools[(turn - 1) % tools.len()];
        let anchor = ctx["anchors"]
            .as_array()
            .and_then(|a| a.first())
            .and_then(Value::as_str)
            .map(str::to_string);
        let args = Self::fabricate_args(rng, tool, anchor.as_deref());
        let query = match &anchor {
            Some(a) => format!("Following up on {a}: please continue with the next step."),
            None => format!(
                "To start, I need {} taken care of via {}.",
                Self::word(rng),
                tool.name
            ),
        };
        let (observation, id) = Self::observation(rng);
        Ok(json!({
            "query": query,
            "steps": [{"call": {"name": tool.name, "arguments": args}, "observation": observation}],
            "answer": format!("Step complete, reference {id}."),
        }))
    }

    fn judge(ctx: &Value) -> Value {
        let multi_turn = ctx["multi_turn"].as_bool().unwrap_or(false);
        let mut scores = json!({
            "tool_fit": 9.0,
            "clarity": 9.0,
            "naturalness": 8.0,
            "success": 9.0,
            "grounding": 9.0,
            "efficiency": 8.0,
        });
        if multi_turn {
            scores["s_anchor"] = json!(9.0);
        }
        scores
    }
}

fn is_string_type(t: &str) -> bool {
    matches!(t, "str" | "string" | "text")
}

fn parse_tools(ctx: &Value) -> Result<Vec<ToolSpec>, ProviderError> {
    match ctx.get("tools") {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| ProviderError::Malformed(format!("bad tools in context: {e}"))),
        None => match ctx.get("tool") {
            Some(v) => Ok(vec![serde_json::from_value(v.clone())
                .map_err(|e| ProviderError::Malformed(format!("bad tool in context: {e}")))?]),
            None => Ok(Vec::new()),
        },
    }
}

impl ChatProvider for SimulatedChat {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        if request.is_empty() {
            return Err(ProviderError::EmptyRequest);
        }
        let ctx = task_context(request)?;
        let mut rng = self.rng.lock().expect("rng lock");
        let body = match ctx["task"].as_str().unwrap_or_default() {
            "single_hop" => {
                let tools = parse_tools(&ctx)?;
                let tool = tools
                    .first()
                    .ok_or_else(|| ProviderError::Malformed("no tool in context".to_string()))?;
                Self::single_hop(&mut rng, tool)
            }
            "multi_hop_serial" => Self::multi_hop_serial(&mut rng, &ctx)?,
            "multi_hop_parallel" => Self::multi_hop_parallel(&mut rng, &ctx)?,
            "storyline" => Self::storyline(&mut rng, &ctx),
            "turn" => Self::turn(&mut rng, &ctx)?,
            "judge" => Self::judge(&ctx),
            other => {
                return Err(ProviderError::Malformed(format!("unknown task '{other}'")));
            }
        };
        Ok(ChatResponse {
            text: serde_json::to_string(&body).expect("body serializes"),
            finish: FinishStatus::Stop,
            retries: 0,
        })
    }
}

// ---------------------------------------------------------------------------
// Embedders
// ---------------------------------------------------------------------------

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Embeds text by hashing tokens onto a fixed basis and L2-normalizing.
/// Deterministic: identical texts always give identical vectors.
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        HashEmbedder { dimension: dimension.max(2) }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(64)
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn embed(&self, texts: &[String]) -> Result<EmbeddingBatch, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let vectors = texts
            .iter()
            .map(|text| {
                let mut v = vec![0.0f64; self.dimension];
                for token in text
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|t| !t.is_empty())
                    .map(str::to_lowercase)
                {
                    let idx = (fnv1a(token.as_bytes()) % self.dimension as u64) as usize;
                    v[idx] += 1.0;
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    v[0] = 1.0;
                } else {
                    for x in &mut v {
                        *x /= norm;
                    }
                }
                v
            })
            .collect();
        EmbeddingBatch::new(vectors)
    }
}

/// Maps exact texts to fixed vectors; unknown texts are an error. Handy for
/// tests that need controlled geometry (e.g. orthogonal embeddings).
pub struct FixedEmbedder {
    map: HashMap<String, Vec<f64>>,
}

impl FixedEmbedder {
    pub fn new(map: HashMap<String, Vec<f64>>) -> Self {
        FixedEmbedder { map }
    }
}

impl EmbeddingProvider for FixedEmbedder {
    fn embed(&self, texts: &[String]) -> Result<EmbeddingBatch, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let vectors: Result<Vec<Vec<f64>>, ProviderError> = texts
            .iter()
            .map(|t| {
                self.map
                    .get(t)
                    .cloned()
                    .ok_or_else(|| ProviderError::Malformed(format!("no fixture vector for '{t}'")))
            })
            .collect();
        EmbeddingBatch::new(vectors?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::ChatMessage;

    fn request(content: &str) -> ChatRequest {
        ChatRequest {
            system: "sys".to_string(),
            messages: vec![ChatMessage::user(content)],
            params: Default::default(),
        }
    }

    #[test]
    fn scripted_chat_replays_in_order_then_exhausts() {
        let chat = ScriptedChat::from_responses(vec!["one", "two"]);
        assert_eq!(chat.chat(&request("a")).unwrap().text, "one");
        assert_eq!(chat.chat(&request("b")).unwrap().text, "two");
        assert!(matches!(
            chat.chat(&request("c")),
            Err(ProviderError::ScriptExhausted(2))
        ));
        assert_eq!(chat.requests().len(), 3);
        assert_eq!(chat.served(), 2);
    }

    #[test]
    fn scripted_chat_rejects_empty_requests() {
        let chat = ScriptedChat::from_responses(vec!["one"]);
        assert!(matches!(
            chat.chat(&ChatRequest::default()),
            Err(ProviderError::EmptyRequest)
        ));
    }

    #[test]
    fn hash_embedder_is_deterministic_and_normalized() {
        let embedder = HashEmbedder::default();
        let texts = vec!["lookup: finds things".to_string(), "lookup: finds things".to_string()];
        let batch = embedder.embed(&texts).unwrap();
        assert_eq!(batch.vectors[0], batch.vectors[1]);
        let norm: f64 = batch.vectors[0].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hash_embedder_handles_token_free_text() {
        let embedder = HashEmbedder::default();
        let batch = embedder.embed(&["!!!".to_string()]).unwrap();
        assert_eq!(batch.vectors[0][0], 1.0);
    }

    #[test]
    fn simulated_chat_is_deterministic_per_seed() {
        let tool = serde_json::json!({
            "name": "lookup",
            "description": "Finds things.",
            "inputSchema": {
                "type": "object",
                "properties": {"topic": {"type": "str"}},
                "required": ["topic"]
            }
        });
        let prompt = format!(
            "Generate.\n{TASK_CONTEXT_OPEN}{}{TASK_CONTEXT_CLOSE}",
            serde_json::json!({"task": "single_hop", "tool": tool})
        );
        let a = SimulatedChat::seeded(7).chat(&request(&prompt)).unwrap();
        let b = SimulatedChat::seeded(7).chat(&request(&prompt)).unwrap();
        let c = SimulatedChat::seeded(8).chat(&request(&prompt)).unwrap();
        assert_eq!(a.text, b.text);
        assert_ne!(a.text, c.text);
        let parsed: Value = serde_json::from_str(&a.text).unwrap();
        assert_eq!(parsed["call"]["name"], "lookup");
        assert!(parsed["call"]["arguments"]["topic"].is_string());
    }

    #[test]
    fn simulated_chat_requires_a_context_block() {
        let provider = SimulatedChat::seeded(1);
        assert!(matches!(
            provider.chat(&request("no context here")),
            Err(ProviderError::Malformed(_))
        ));
    }
}
