//! The QAOA conversation data model and its wire format.
//!
//! A conversation is an ordered list of [`Event`]s — Query, Action,
//! Observation, Answer — partitioned into turns (one per Query). Instances
//! travel as line-delimited records; see [`wire`] for the exact shape.

mod response;
pub(crate) mod structure;
mod types;
pub mod wire;

pub use response::{parse_model_response, ParsedResponse};
pub use structure::{classify_structure, HopClass, Routing, StructureLabel, StructureReport, TurnClass};
pub use types::{
    Category, Domain, Event, FunctionCall, InputSchema, PropertySchema, QaoaConversation, Source,
    ToolSpec, Turn,
};
pub use wire::{
    parse_conversation, parse_tool_specs, read_conversations, serialize_conversation,
    serialize_tool_specs, write_conversations,
};

use thiserror::Error;

/// Errors raised while decoding or validating conversations.
#[derive(Debug, Error)]
pub enum ModelError {
    /// The record is structurally unusable: missing fields, unparsable
    /// embedded objects, unknown message roles, or empty content.
    #[error("malformed record{}: {detail}", fmt_line(.line))]
    MalformedRecord { line: Option<usize>, detail: String },
    /// The message sequence violates the QAOA turn grammar.
    #[error("role order violation at event {index}: {detail}")]
    RoleOrderViolation { index: usize, detail: String },
}

impl ModelError {
    pub(crate) fn malformed(detail: impl Into<String>) -> Self {
        ModelError::MalformedRecord { line: None, detail: detail.into() }
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            ModelError::MalformedRecord { detail, .. } => {
                ModelError::MalformedRecord { line: Some(line), detail }
            }
            other => other,
        }
    }
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" at line {n}"),
        None => String::new(),
    }
}
