//! Line-delimited wire format for conversations.
//!
//! Each line is one object:
//!
//! ```json
//! {"conversations": [{"from": "human", "value": "..."},
//!                    {"from": "function_call", "value": "{\"name\":...,\"arguments\":{...}}"},
//!                    {"from": "observation", "value": "..."},
//!                    {"from": "gpt", "value": "<answer>...</answer>"}],
//!  "system": "...",
//!  "tools": "[{\"name\": ..., \"description\": ..., \"category\": ..., \"domain\": ..., \"inputSchema\": {...}}]"}
//! ```
//!
//! `tools` is a string containing an encoded tool list; `function_call`
//! values are strings containing an encoded call object. Optional `id` and
//! `source` keys are accepted and re-emitted when present; records without
//! them get a line-based id on load. Serialization is canonical (compact
//! embedded objects, fixed key order), so a parse/serialize pass is
//! byte-stable after the first normalization.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use super::types::{Event, FunctionCall, QaoaConversation, ToolSpec};
use super::ModelError;

const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";

#[derive(Debug, Serialize, Deserialize)]
struct WireMessage {
    from: String,
    value: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    conversations: Vec<WireMessage>,
    system: String,
    tools: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

/// Decodes the `tools` string: an encoded list of tool objects.
pub fn parse_tool_specs(tools: &str) -> Result<Vec<ToolSpec>, ModelError> {
    let trimmed = tools.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    serde_json::from_str(trimmed)
        .map_err(|e| ModelError::malformed(format!("unparsable tools string: {e}")))
}

/// Encodes a tool list back into the compact `tools` string.
pub fn serialize_tool_specs(tools: &[ToolSpec]) -> String {
    serde_json::to_string(tools).expect("tool specs serialize")
}

/// Parses one wire-format line into a conversation and validates the turn
/// grammar. `fallback_id` is used when the record carries no `id`.
pub fn parse_conversation_with_id(
    line: &str,
    fallback_id: &str,
) -> Result<QaoaConversation, ModelError> {
    let record: WireRecord = serde_json::from_str(line.trim())
        .map_err(|e| ModelError::malformed(format!("unparsable record: {e}")))?;
    if record.conversations.is_empty() {
        return Err(ModelError::malformed("record has an empty conversations list"));
    }
    let mut events = Vec::with_capacity(record.conversations.len());
    for (i, msg) in record.conversations.iter().enumerate() {
        let event = match msg.from.as_str() {
            "human" => Event::Query(msg.value.clone()),
            "function_call" => {
                let call: FunctionCall = serde_json::from_str(msg.value.trim()).map_err(|e| {
                    ModelError::malformed(format!("message {i}: unparsable function_call: {e}"))
                })?;
                if call.name.trim().is_empty() {
                    return Err(ModelError::malformed(format!(
                        "message {i}: function_call has an empty name"
                    )));
                }
                Event::Action(call)
            }
            "observation" => Event::Observation(msg.value.clone()),
            "gpt" => Event::Answer(extract_answer_text(&msg.value, i)?),
            other => {
                return Err(ModelError::malformed(format!(
                    "message {i}: unknown role '{other}'"
                )))
            }
        };
        events.push(event);
    }
    let candidates = parse_tool_specs(&record.tools)?;
    for tool in &candidates {
        tool.validate()?;
    }
    let conv = QaoaConversation {
        id: record.id.unwrap_or_else(|| fallback_id.to_string()),
        system_prompt: record.system,
        candidates,
        events,
        source: record.source,
    };
    conv.validate()?;
    Ok(conv)
}

/// Parses one wire-format line. Records without an explicit `id` get `"0"`.
pub fn parse_conversation(line: &str) -> Result<QaoaConversation, ModelError> {
    parse_conversation_with_id(line, "0")
}

/// Extracts the text between answer tags. Text without tags is taken whole;
/// an opening tag without a closing one is malformed.
fn extract_answer_text(value: &str, index: usize) -> Result<String, ModelError> {
    match value.find(ANSWER_OPEN) {
        None => Ok(value.to_string()),
        Some(open) => {
            let inner_start = open + ANSWER_OPEN.len();
            match value[inner_start..].rfind(ANSWER_CLOSE) {
                None => Err(ModelError::malformed(format!(
                    "message {index}: unterminated answer tag"
                ))),
                Some(close) => Ok(value[inner_start..inner_start + close].to_string()),
            }
        }
    }
}

/// Serializes a conversation into one canonical wire-format line.
///
/// The conversation must satisfy the turn grammar; answers are re-wrapped in
/// answer tags and calls re-encoded as compact objects, so
/// `parse_conversation(serialize_conversation(c))` reproduces `c`.
pub fn serialize_conversation(conv: &QaoaConversation) -> Result<String, ModelError> {
    conv.validate()?;
    let conversations = conv
        .events
        .iter()
        .map(|ev| match ev {
            Event::Query(q) => WireMessage { from: "human".to_string(), value: q.clone() },
            Event::Action(call) => WireMessage {
                from: "function_call".to_string(),
                value: serde_json::to_string(call).expect("call serializes"),
            },
            Event::Observation(o) => {
                WireMessage { from: "observation".to_string(), value: o.clone() }
            }
            Event::Answer(a) => WireMessage {
                from: "gpt".to_string(),
                value: format!("{ANSWER_OPEN}{a}{ANSWER_CLOSE}"),
            },
        })
        .collect();
    let record = WireRecord {
        id: Some(conv.id.clone()),
        conversations,
        system: conv.system_prompt.clone(),
        tools: serialize_tool_specs(&conv.candidates),
        source: conv.source.clone(),
    };
    Ok(serde_json::to_string(&record).expect("record serializes"))
}

/// Reads all conversations from a line-delimited reader. Blank lines are
/// skipped; errors carry the 1-based line number.
pub fn read_conversations<R: BufRead>(reader: R) -> Result<Vec<QaoaConversation>, ModelError> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ModelError::malformed(format!("read failure: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let conv = parse_conversation_with_id(&line, &lineno.to_string())
            .map_err(|e| e.at_line(lineno + 1))?;
        out.push(conv);
    }
    Ok(out)
}

/// Writes conversations as one wire-format line each.
pub fn write_conversations<W: Write>(
    mut writer: W,
    convs: &[QaoaConversation],
) -> Result<(), ModelError> {
    for conv in convs {
        let line = serialize_conversation(conv)?;
        writeln!(writer, "{line}")
            .map_err(|e| ModelError::malformed(format!("write failure: {e}")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    /// A single-hop record mirroring the reference data sample: one human
    /// query, one function call, an empty observation, an empty answer.
    pub(crate) fn sample_line() -> String {
        let tools = json!([
            {
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
            },
            {
                "name": "update_with_defaults",
                "description": "Updates the defaults dictionary with the values from the updates dictionary.",
                "inputSchema": {
                    "type": "object",
                    "properties": {
                        "defaults": {
                            "type": "object",
                            "additionalProperties": {"type": "integer"},
                            "description": "The default dictionary to be updated."
                        },
                        "updates": {
                            "type": "object",
                            "additionalProperties": {"type": "integer"},
                            "description": "The dictionary containing updates to apply to the defaults."
                        }
                    },
                    "required": ["defaults", "updates"]
                },
                "category": "operations",
                "domain": "technology"
            }
        ]);
        serde_json::to_string(&json!({
            "conversations": [
                {"from": "human", "value": "Provide secure access to medical records for a patient named John Smith."},
                {"from": "function_call", "value": "{\"name\":\"MedicalRecordAccess\",\"arguments\":{\"patient_name\":\"John Smith\"}}"},
                {"from": "observation", "value": ""},
                {"from": "gpt", "value": "<answer></answer>"}
            ],
            "system": "You are an assistant that calls tools.",
            "tools": tools.to_string(),
        }))
        .unwrap()
    }

    #[test]
    fn parses_the_reference_sample() {
        let conv = parse_conversation(&sample_line()).unwrap();
        assert_eq!(conv.turns().len(), 1);
        let calls = conv.all_calls();
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].name, "MedicalRecordAccess");
        assert_eq!(
            calls[0].arguments.get("patient_name"),
            Some(&json!("John Smith"))
        );
        assert_eq!(conv.candidates.len(), 2);
        assert_eq!(conv.candidates[1].name, "update_with_defaults");
        // The sample's observation is empty, and that is legal.
        assert!(matches!(&conv.events[2], Event::Observation(o) if o.is_empty()));
    }

    #[test]
    fn empty_conversations_list_is_malformed() {
        let line = r#"{"conversations": [], "system": "", "tools": "[]"}"#;
        assert!(matches!(
            parse_conversation(line),
            Err(ModelError::MalformedRecord { .. })
        ));
    }

    #[test]
    fn observation_first_is_a_role_order_violation() {
        let line = serde_json::to_string(&json!({
            "conversations": [
                {"from": "observation", "value": "stray"},
                {"from": "gpt", "value": "<answer>x</answer>"}
            ],
            "system": "",
            "tools": "[]"
        }))
        .unwrap();
        assert!(matches!(
            parse_conversation(&line),
            Err(ModelError::RoleOrderViolation { index: 0, .. })
        ));
    }

    #[test]
    fn unknown_roles_are_rejected_not_skipped() {
        let line = serde_json::to_string(&json!({
            "conversations": [
                {"from": "human", "value": "q"},
                {"from": "tool", "value": "x"},
                {"from": "gpt", "value": "<answer>a</answer>"}
            ],
            "system": "",
            "tools": "[]"
        }))
        .unwrap();
        assert!(matches!(
            parse_conversation(&line),
            Err(ModelError::MalformedRecord { .. })
        ));
    }

    #[test]
    fn round_trip_is_byte_stable_after_one_normalization_pass() {
        let conv = parse_conversation(&sample_line()).unwrap();
        let first = serialize_conversation(&conv).unwrap();
        let reparsed = parse_conversation(&first).unwrap();
        assert_eq!(reparsed, conv);
        let second = serialize_conversation(&reparsed).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn serializing_an_empty_conversation_is_rejected() {
        let conv = QaoaConversation {
            id: "x".to_string(),
            system_prompt: String::new(),
            candidates: Vec::new(),
            events: Vec::new(),
            source: None,
        };
        assert!(serialize_conversation(&conv).is_err());
    }

    #[test]
    fn multi_turn_serialization_keeps_query_order() {
        let mut events = Vec::new();
        for i in 0..3 {
            events.push(Event::Query(format!("q{i}")));
            events.push(Event::Answer(format!("a{i}")));
        }
        let conv = QaoaConversation {
            id: "mt".to_string(),
            system_prompt: "s".to_string(),
            candidates: Vec::new(),
            events,
            source: None,
        };
        let line = serialize_conversation(&conv).unwrap();
        let record: serde_json::Value = serde_json::from_str(&line).unwrap();
        let human: Vec<&str> = record["conversations"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|m| m["from"] == "human")
            .map(|m| m["value"].as_str().unwrap())
            .collect();
        assert_eq!(human, vec!["q0", "q1", "q2"]);
    }

    #[test]
    fn reader_assigns_line_ids_and_reports_line_numbers() {
        let data = format!("{}\n\n{}\n", sample_line(), sample_line());
        let convs = read_conversations(data.as_bytes()).unwrap();
        assert_eq!(convs.len(), 2);
        assert_eq!(convs[0].id, "0");
        assert_eq!(convs[1].id, "2");

        let bad = "{not json}\n";
        match read_conversations(bad.as_bytes()) {
            Err(ModelError::MalformedRecord { line: Some(1), .. }) => {}
            other => panic!("expected line-tagged malformed record, got {other:?}"),
        }
    }

    #[test]
    fn answer_without_tags_is_taken_whole() {
        let line = serde_json::to_string(&json!({
            "conversations": [
                {"from": "human", "value": "q"},
                {"from": "gpt", "value": "plain answer"}
            ],
            "system": "",
            "tools": "[]"
        }))
        .unwrap();
        let conv = parse_conversation(&line).unwrap();
        assert!(matches!(&conv.events[1], Event::Answer(a) if a == "plain answer"));
    }
}
