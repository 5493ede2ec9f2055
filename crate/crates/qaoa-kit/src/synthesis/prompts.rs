//! Versioned prompt templates, shipped with the crate. The `{context}`
//! placeholder receives a machine-readable task block so deterministic mock
//! providers can fabricate responses without parsing prose.

use serde_json::Value;

use crate::providers::mock::{TASK_CONTEXT_CLOSE, TASK_CONTEXT_OPEN};

/// System prompt injected into final instances.
pub const INSTANCE_SYSTEM_PROMPT: &str = include_str!("../../templates/system_prompt.txt");
/// System text for generation exchanges.
pub const GENERATOR_SYSTEM: &str = include_str!("../../templates/generator_system.txt");
pub const SINGLE_HOP: &str = include_str!("../../templates/single_hop.txt");
pub const MULTI_HOP_SERIAL: &str = include_str!("../../templates/multi_hop_serial.txt");
pub const MULTI_HOP_PARALLEL: &str = include_str!("../../templates/multi_hop_parallel.txt");
pub const STORYLINE: &str = include_str!("../../templates/storyline.txt");
pub const TURN: &str = include_str!("../../templates/turn.txt");
pub const JUDGE: &str = include_str!("../../templates/judge.txt");

/// Fills `{key}` placeholders.
pub(crate) fn render(template: &str, substitutions: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (key, value) in substitutions {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// The machine-readable context block embedded in every generation prompt.
pub(crate) fn context_block(context: &Value) -> String {
    format!("{TASK_CONTEXT_OPEN}{context}{TASK_CONTEXT_CLOSE}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn render_fills_placeholders() {
        let out = render("a {x} b {y} c {x}", &[("x", "1".into()), ("y", "2".into())]);
        assert_eq!(out, "a 1 b 2 c 1");
    }

    #[test]
    fn templates_carry_their_placeholders() {
        assert!(SINGLE_HOP.contains("{tool}") && SINGLE_HOP.contains("{context}"));
        assert!(MULTI_HOP_SERIAL.contains("{history}"));
        assert!(MULTI_HOP_PARALLEL.contains("{steps}"));
        assert!(TURN.contains("{anchors}"));
        assert!(JUDGE.contains("{conversation}"));
        assert!(INSTANCE_SYSTEM_PROMPT.contains("<tool_call>"));
        assert!(INSTANCE_SYSTEM_PROMPT.contains("<answer>"));
    }

    #[test]
    fn context_block_is_parseable_by_the_mock() {
        let block = context_block(&json!({"task": "judge"}));
        assert!(block.starts_with(TASK_CONTEXT_OPEN));
        assert!(block.ends_with(TASK_CONTEXT_CLOSE));
    }
}
