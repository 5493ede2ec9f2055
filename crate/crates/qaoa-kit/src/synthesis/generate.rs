//! Scenario generators: drive the chat provider, decode its payloads, and
//! validate the structural constraints each scenario promises — schema
//! conformance, serial dependency, parallel independence, anchor linkage.

use serde::Deserialize;
use serde_json::{json, Value};
use std::time::Instant;

use crate::model::{Event, FunctionCall, QaoaConversation, ToolSpec};
use crate::providers::{ChatExchange, ChatProvider, ChatRequest};

use super::anchors::{check_anchor_linkage, collapse_ws, extract_anchors};
use super::prompts;
use super::task::{GenerationTask, Scenario};
use super::SynthesisError;

/// A validated raw trajectory, before candidate assembly and system-prompt
/// injection.
#[derive(Debug, Clone)]
pub struct TrajectoryDraft {
    pub conversation: QaoaConversation,
    /// Provider exchanges, recorded verbatim in order.
    pub generation_log: Vec<ChatExchange>,
    /// Multi-turn only: harvested anchors and where they were consumed.
    pub anchors: Vec<AnchorRecord>,
}

/// One harvested anchor: the value, the event index of the observation that
/// produced it, and the turn (if any) whose query or arguments consumed it.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorRecord {
    pub value: String,
    pub producing_observation: usize,
    pub consumed_by_turn: Option<usize>,
}

fn invalid(detail: impl Into<String>) -> SynthesisError {
    SynthesisError::InvalidGeneration { detail: detail.into() }
}

/// Sends one generation exchange and records it.
fn exchange(
    chat: &dyn ChatProvider,
    log: &mut Vec<ChatExchange>,
    prompt: String,
) -> Result<String, SynthesisError> {
    let request = ChatRequest::user(prompts::GENERATOR_SYSTEM, prompt);
    let started = Instant::now();
    let response = chat.chat(&request)?;
    let text = response.text.clone();
    log.push(ChatExchange { request, response, latency_ms: started.elapsed().as_millis() });
    Ok(text)
}

/// Decodes the outermost JSON object in a provider reply, tolerating prose
/// or fences around it.
pub(crate) fn parse_payload<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, SynthesisError> {
    let start = text.find('{').ok_or_else(|| invalid("reply carries no JSON object"))?;
    let end = text.rfind('}').ok_or_else(|| invalid("reply carries no JSON object"))?;
    if end < start {
        return Err(invalid("reply carries no JSON object"));
    }
    serde_json::from_str(&text[start..=end])
        .map_err(|e| invalid(format!("undecodable payload: {e}")))
}

fn tool_by_name<'a>(tools: &'a [ToolSpec], name: &str) -> Result<&'a ToolSpec, SynthesisError> {
    tools.iter().find(|t| t.name == name).ok_or_else(|| SynthesisError::SchemaViolation {
        detail: format!("call names '{name}', which is not in the sampled subset"),
    })
}

fn type_matches(declared: &str, value: &Value) -> bool {
    match declared {
        "str" | "string" | "text" => value.is_string(),
        "int" | "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
        "number" | "float" | "double" => value.is_number(),
        "bool" | "boolean" => value.is_boolean(),
        "array" | "list" => value.is_array(),
        "object" | "dict" => value.is_object(),
        _ => true,
    }
}

/// Checks a call's arguments against its tool's schema: required parameters
/// present, no undeclared parameters, declared types respected.
pub fn validate_arguments(tool: &ToolSpec, call: &FunctionCall) -> Result<(), SynthesisError> {
    let violation = |detail: String| Err(SynthesisError::SchemaViolation { detail });
    let Some(schema) = &tool.input_schema else { return Ok(()) };
    for required in &schema.required {
        if !call.arguments.contains_key(required) {
            return violation(format!(
                "call to '{}' omits required argument '{required}'",
                tool.name
            ));
        }
    }
    if let Some(props) = &schema.properties {
        for (key, value) in &call.arguments {
            let Some(prop) = props.get(key) else {
                return violation(format!("call to '{}' passes undeclared argument '{key}'", tool.name));
            };
            if let Some(declared) = prop.value_type.as_deref() {
                if !type_matches(declared, value) {
                    return violation(format!(
                        "call to '{}': argument '{key}' is not of declared type '{declared}'",
                        tool.name
                    ));
                }
            }
        }
    }
    Ok(())
}

fn tools_json(tools: &[ToolSpec]) -> Value {
    serde_json::to_value(tools).expect("tools serialize")
}

fn single_turn_conversation(
    id: &str,
    query: String,
    steps: Vec<(FunctionCall, String)>,
    answer: String,
) -> QaoaConversation {
    let mut events = vec![Event::Query(query)];
    for (call, obs) in steps {
        events.push(Event::Action(call));
        events.push(Event::Observation(obs));
    }
    events.push(Event::Answer(answer));
    QaoaConversation {
        id: id.to_string(),
        system_prompt: String::new(),
        candidates: Vec::new(),
        events,
        source: Some("synthetic".to_string()),
    }
}

/// The per-call dependency flags of the draft's single turn.
fn dependency_flags(conv: &QaoaConversation) -> Vec<bool> {
    let turns = conv.turns();
    crate::model::structure::call_dependencies(&turns[0])
}

// ---------------------------------------------------------------------------
// Single-hop
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct SingleHopPayload {
    query: String,
    call: FunctionCall,
    #[serde(default)]
    observation: String,
    #[serde(default)]
    answer: String,
}

/// One provider exchange producing the whole one-step trajectory, grounded
/// strictly in the tool's schema.
pub fn generate_single_hop(
    task: &GenerationTask,
    chat: &dyn ChatProvider,
) -> Result<TrajectoryDraft, SynthesisError> {
    task.validate()?;
    let tool = &task.tools[0];
    let mut log = Vec::new();
    let context = json!({"task": "single_hop", "tool": tool});
    let prompt = prompts::render(
        prompts::SINGLE_HOP,
        &[
            ("tool", serde_json::to_string_pretty(tool).expect("tool serializes")),
            ("context", prompts::context_block(&context)),
        ],
    );
    let reply = exchange(chat, &mut log, prompt)?;
    let payload: SingleHopPayload = parse_payload(&reply)?;

    let called = tool_by_name(&task.tools, &payload.call.name)?;
    validate_arguments(called, &payload.call)?;

    let conversation = single_turn_conversation(
        &task.id,
        payload.query,
        vec![(payload.call, payload.observation)],
        payload.answer,
    );
    conversation.validate()?;
    Ok(TrajectoryDraft { conversation, generation_log: log, anchors: Vec::new() })
}

// ---------------------------------------------------------------------------
// Multi-hop
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct SerialStepPayload {
    #[serde(default)]
    query: Option<String>,
    call: FunctionCall,
    #[serde(default)]
    observation: String,
    #[serde(default)]
    answer: Option<String>,
}

#[derive(Deserialize)]
struct ParallelPayload {
    query: String,
    calls: Vec<FunctionCall>,
    #[serde(default)]
    observations: Vec<String>,
    #[serde(default)]
    answer: String,
}

/// Serial mode issues K exchanges, each seeing the history so far, and every
/// step after the first must consume a value introduced by an earlier
/// observation. Parallel mode issues one exchange emitting the query and all
/// K calls, which must be mutually independent and grounded in the query.
pub fn generate_multi_hop(
    task: &GenerationTask,
    chat: &dyn ChatProvider,
) -> Result<TrajectoryDraft, SynthesisError> {
    task.validate()?;
    match task.scenario {
        Scenario::MultiHopSerial => generate_serial(task, chat),
        Scenario::MultiHopParallel => generate_parallel(task, chat),
        other => Err(SynthesisError::InvalidTask {
            detail: format!("generate_multi_hop cannot run a {other:?} task"),
        }),
    }
}

fn generate_serial(
    task: &GenerationTask,
    chat: &dyn ChatProvider,
) -> Result<TrajectoryDraft, SynthesisError> {
    let mut log = Vec::new();
    let mut query = None;
    let mut answer = None;
    let mut steps: Vec<(FunctionCall, String)> = Vec::new();
    let mut history = Vec::new();

    for step in 1..=task.steps {
        let context = json!({
            "task": "multi_hop_serial",
            "step": step,
            "steps": task.steps,
            "tools": tools_json(&task.tools),
            "history": history,
        });
        let prompt = prompts::render(
            prompts::MULTI_HOP_SERIAL,
            &[
                ("step", step.to_string()),
                ("steps", task.steps.to_string()),
                ("tools", serde_json::to_string_pretty(&task.tools).expect("serialize")),
                ("history", serde_json::to_string_pretty(&history).expect("serialize")),
                ("context", prompts::context_block(&context)),
            ],
        );
        let reply = exchange(chat, &mut log, prompt)?;
        let payload: SerialStepPayload = parse_payload(&reply)?;

        let called = tool_by_name(&task.tools, &payload.call.name)?;
        validate_arguments(called, &payload.call)?;

        if step == 1 {
            query = payload.query;
            if query.as_deref().map_or(true, |q| q.trim().is_empty()) {
                return Err(invalid("serial step 1 produced no query"));
            }
        }
        if step == task.steps {
            answer = payload.answer;
        }
        history.push(json!({
            "call": payload.call,
            "observation": payload.observation,
        }));
        steps.push((payload.call, payload.observation));
    }

    let conversation = single_turn_conversation(
        &task.id,
        query.unwrap_or_default(),
        steps,
        answer.unwrap_or_default(),
    );
    conversation.validate()?;

    let flags = dependency_flags(&conversation);
    for (k, dependent) in flags.iter().enumerate().skip(1) {
        if !dependent {
            return Err(SynthesisError::DependencyViolation {
                detail: format!(
                    "serial step {} inherits no value from an earlier observation",
                    k + 1
                ),
            });
        }
    }
    Ok(TrajectoryDraft { conversation, generation_log: log, anchors: Vec::new() })
}

/// Scalar argument values that a grounded parallel query must quote.
fn groundable(call: &FunctionCall) -> Vec<String> {
    call.arguments
        .values()
        .filter_map(|v| match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        })
        .collect()
}

fn generate_parallel(
    task: &GenerationTask,
    chat: &dyn ChatProvider,
) -> Result<TrajectoryDraft, SynthesisError> {
    let mut log = Vec::new();
    let context = json!({
        "task": "multi_hop_parallel",
        "steps": task.steps,
        "tools": tools_json(&task.tools),
    });
    let prompt = prompts::render(
        prompts::MULTI_HOP_PARALLEL,
        &[
            ("steps", task.steps.to_string()),
            ("tools", serde_json::to_string_pretty(&task.tools).expect("serialize")),
            ("context", prompts::context_block(&context)),
        ],
    );
    let reply = exchange(chat, &mut log, prompt)?;
    let payload: ParallelPayload = parse_payload(&reply)?;

    if payload.calls.len() != task.steps {
        return Err(invalid(format!(
            "expected {} parallel calls, got {}",
            task.steps,
            payload.calls.len()
        )));
    }
    let mut names: Vec<&str> = payload.calls.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() != payload.calls.len() {
        return Err(SynthesisError::SchemaViolation {
            detail: "parallel calls must use distinct tools".to_string(),
        });
    }

    let query_lower = collapse_ws(&payload.query).to_lowercase();
    for call in &payload.calls {
        let called = tool_by_name(&task.tools, &call.name)?;
        validate_arguments(called, call)?;
        for value in groundable(call) {
            let needle = collapse_ws(&value).to_lowercase();
            if needle.len() >= 2 && !query_lower.contains(&needle) {
                return Err(SynthesisError::SchemaViolation {
                    detail: format!(
                        "argument value '{value}' of '{}' is not grounded in the query",
                        call.name
                    ),
                });
            }
        }
    }

    let mut observations = payload.observations;
    observations.resize(payload.calls.len(), String::new());
    let steps: Vec<(FunctionCall, String)> =
        payload.calls.into_iter().zip(observations).collect();
    let conversation =
        single_turn_conversation(&task.id, payload.query, steps, payload.answer);
    conversation.validate()?;

    let flags = dependency_flags(&conversation);
    for (k, dependent) in flags.iter().enumerate() {
        if *dependent {
            return Err(SynthesisError::DependencyViolation {
                detail: format!(
                    "parallel step {} references a value introduced by an earlier observation",
                    k + 1
                ),
            });
        }
    }
    Ok(TrajectoryDraft { conversation, generation_log: log, anchors: Vec::new() })
}

// ---------------------------------------------------------------------------
// Multi-turn
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct StorylinePayload {
    storyline: String,
}

#[derive(Deserialize)]
struct TurnStepPayload {
    call: FunctionCall,
    #[serde(default)]
    observation: String,
}

#[derive(Deserialize)]
struct TurnPayload {
    query: String,
    steps: Vec<TurnStepPayload>,
    #[serde(default)]
    answer: String,
}

/// Two-stage planning: an episode storyline exchange, then one exchange per
/// turn. After each turn, anchors are harvested from its observations and
/// the next turn must consume at least one of them.
pub fn generate_multi_turn(
    task: &GenerationTask,
    chat: &dyn ChatProvider,
) -> Result<TrajectoryDraft, SynthesisError> {
    task.validate()?;
    let mut log = Vec::new();

    let context =
        json!({"task": "storyline", "turns": task.turns, "tools": tools_json(&task.tools)});
    let prompt = prompts::render(
        prompts::STORYLINE,
        &[
            ("turns", task.turns.to_string()),
            ("tools", serde_json::to_string_pretty(&task.tools).expect("serialize")),
            ("context", prompts::context_block(&context)),
        ],
    );
    let reply = exchange(chat, &mut log, prompt)?;
    let storyline: StorylinePayload = parse_payload(&reply)?;

    let mut events: Vec<Event> = Vec::new();
    let mut previous_anchors: Vec<String> = Vec::new();
    for turn in 1..=task.turns {
        let context = json!({
            "task": "turn",
            "turn": turn,
            "turns": task.turns,
            "tools": tools_json(&task.tools),
            "storyline": storyline.storyline,
            "anchors": previous_anchors,
        });
        let prompt = prompts::render(
            prompts::TURN,
            &[
                ("turn", turn.to_string()),
                ("turns", task.turns.to_string()),
                ("storyline", storyline.storyline.clone()),
                ("tools", serde_json::to_string_pretty(&task.tools).expect("serialize")),
                ("anchors", serde_json::to_string(&previous_anchors).expect("serialize")),
                ("context", prompts::context_block(&context)),
            ],
        );
        let reply = exchange(chat, &mut log, prompt)?;
        let payload: TurnPayload = parse_payload(&reply)?;
        if payload.steps.is_empty() {
            return Err(invalid(format!("turn {turn} produced no calls")));
        }
        for step in &payload.steps {
            let called = tool_by_name(&task.tools, &step.call.name)?;
            validate_arguments(called, &step.call)?;
        }

        events.push(Event::Query(payload.query));
        let mut harvested = Vec::new();
        for step in payload.steps {
            events.push(Event::Action(step.call));
            for anchor in extract_anchors(&step.observation) {
                if !harvested.contains(&anchor) {
                    harvested.push(anchor);
                }
            }
            events.push(Event::Observation(step.observation));
        }
        events.push(Event::Answer(payload.answer));
        previous_anchors = harvested;
    }

    let conversation = QaoaConversation {
        id: task.id.clone(),
        system_prompt: String::new(),
        candidates: Vec::new(),
        events,
        source: Some("synthetic".to_string()),
    };
    conversation.validate()?;

    let linkage = check_anchor_linkage(&conversation)?;
    if let Some(turn) = linkage.turns.iter().find(|t| !t.pass) {
        return Err(SynthesisError::AnchorViolation {
            detail: format!(
                "turn {} consumes none of the previous turn's anchors",
                turn.turn + 1
            ),
        });
    }

    let anchors = anchor_records(&conversation, &linkage);
    Ok(TrajectoryDraft { conversation, generation_log: log, anchors })
}

fn anchor_records(
    conv: &QaoaConversation,
    linkage: &super::anchors::LinkageReport,
) -> Vec<AnchorRecord> {
    let spans = conv.turn_spans();
    let mut records = Vec::new();
    for turn_link in &linkage.turns {
        let producing_turn = turn_link.turn - 1;
        let span = &spans[producing_turn];
        for value in &turn_link.available {
            // Event index of the first observation in the producing turn
            // whose text introduces this anchor.
            let producing_observation = conv.events[span.clone()]
                .iter()
                .enumerate()
                .find_map(|(offset, ev)| match ev {
                    Event::Observation(o) if extract_anchors(o).contains(value) => {
                        Some(span.start + offset)
                    }
                    _ => None,
                })
                .unwrap_or(span.start);
            let consumed = turn_link.consumed.contains(value);
            records.push(AnchorRecord {
                value: value.clone(),
                producing_observation,
                consumed_by_turn: consumed.then_some(turn_link.turn),
            });
        }
    }
    records
}
