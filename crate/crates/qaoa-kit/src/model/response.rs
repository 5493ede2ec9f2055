//! Total parser for raw model output: tool-call tag blocks and the answer
//! tag. Never fails; anything unparsable is reported as a diagnostic.

use super::types::FunctionCall;

const CALL_OPEN: &str = "<tool_call>";
const CALL_CLOSE: &str = "</tool_call>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";

/// Structured view of a raw model response.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedResponse {
    /// Calls extracted from tool-call blocks, in order of appearance.
    pub calls: Vec<FunctionCall>,
    /// Content of the answer tag, if one is present.
    pub answer: Option<String>,
    /// Diagnostics for blocks that could not be decoded.
    pub parse_errors: Vec<String>,
}

impl ParsedResponse {
    /// A well-formed response carries calls xor a non-empty answer, never
    /// both, and decoded cleanly.
    pub fn is_well_formed(&self) -> bool {
        let has_answer = self.answer.as_deref().is_some_and(|a| !a.trim().is_empty());
        self.parse_errors.is_empty() && (!self.calls.is_empty() ^ has_answer)
    }
}

/// Extracts every maximal tool-call block and the answer tag from raw text.
///
/// Total over arbitrary input: malformed payloads and unterminated tags are
/// recorded in `parse_errors` and extraction continues past them.
pub fn parse_model_response(text: &str) -> ParsedResponse {
    let mut out = ParsedResponse::default();
    let mut cursor = 0usize;
    while let Some(open_rel) = text[cursor..].find(CALL_OPEN) {
        let payload_start = cursor + open_rel + CALL_OPEN.len();
        match text[payload_start..].find(CALL_CLOSE) {
            None => {
                out.parse_errors
                    .push("unterminated tool_call block".to_string());
                break;
            }
            Some(close_rel) => {
                let payload = text[payload_start..payload_start + close_rel].trim();
                match serde_json::from_str::<FunctionCall>(payload) {
                    Ok(call) if !call.name.trim().is_empty() => out.calls.push(call),
                    Ok(_) => out
                        .parse_errors
                        .push("tool_call payload has an empty name".to_string()),
                    Err(e) => out
                        .parse_errors
                        .push(format!("unparsable tool_call payload: {e}")),
                }
                cursor = payload_start + close_rel + CALL_CLOSE.len();
            }
        }
    }
    if let Some(open) = text.find(ANSWER_OPEN) {
        let inner_start = open + ANSWER_OPEN.len();
        match text[inner_start..].rfind(ANSWER_CLOSE) {
            None => out
                .parse_errors
                .push("unterminated answer tag".to_string()),
            Some(close) => out.answer = Some(text[inner_start..inner_start + close].to_string()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn extracts_a_single_call_block() {
        let text = "<tool_call>\n{\"name\":\"fetch\",\"arguments\":{}}\n</tool_call>";
        let parsed = parse_model_response(text);
        assert_eq!(parsed.calls.len(), 1);
        assert_eq!(parsed.calls[0].name, "fetch");
        assert!(parsed.calls[0].arguments.is_empty());
        assert_eq!(parsed.answer, None);
        assert!(parsed.parse_errors.is_empty());
        assert!(parsed.is_well_formed());
    }

    #[test]
    fn extracts_an_answer_tag() {
        let parsed = parse_model_response("<answer>done</answer>");
        assert!(parsed.calls.is_empty());
        assert_eq!(parsed.answer.as_deref(), Some("done"));
        assert!(parsed.is_well_formed());
    }

    #[test]
    fn truncated_payload_becomes_a_diagnostic() {
        let parsed = parse_model_response("<tool_call>{\"name\":\"fe</tool_call>");
        assert!(parsed.calls.is_empty());
        assert_eq!(parsed.parse_errors.len(), 1);
    }

    #[test]
    fn multiple_blocks_come_back_in_order() {
        let text = format!(
            "first <tool_call>{}</tool_call> then <tool_call>{}</tool_call>",
            json!({"name": "a", "arguments": {"x": 1}}),
            json!({"name": "b", "arguments": {}}),
        );
        let parsed = parse_model_response(&text);
        let names: Vec<&str> = parsed.calls.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["a", "b"]);
    }

    #[test]
    fn bad_block_does_not_stop_later_blocks() {
        let text = "<tool_call>garbage</tool_call><tool_call>{\"name\":\"ok\"}</tool_call>";
        let parsed = parse_model_response(text);
        assert_eq!(parsed.calls.len(), 1);
        assert_eq!(parsed.parse_errors.len(), 1);
    }

    #[test]
    fn calls_and_answer_together_are_not_well_formed() {
        let text = "<tool_call>{\"name\":\"f\"}</tool_call><answer>also this</answer>";
        let parsed = parse_model_response(text);
        assert_eq!(parsed.calls.len(), 1);
        assert_eq!(parsed.answer.as_deref(), Some("also this"));
        assert!(!parsed.is_well_formed());
    }

    #[test]
    fn arbitrary_text_yields_an_empty_response() {
        let parsed = parse_model_response("no tags at all");
        assert!(parsed.calls.is_empty());
        assert!(parsed.answer.is_none());
        assert!(parsed.parse_errors.is_empty());
    }
}
