//! Core domain types: tool specifications, function calls, and the QAOA
//! conversation with its derived turn partition.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt;
use std::str::FromStr;

use super::ModelError;

/// Functional category of a tool. Six labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Category {
    Analysis,
    Operations,
    System,
    Visualization,
    Search,
    Generate,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Analysis,
        Category::Operations,
        Category::System,
        Category::Visualization,
        Category::Search,
        Category::Generate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Analysis => "analysis",
            Category::Operations => "operations",
            Category::System => "system",
            Category::Visualization => "visualization",
            Category::Search => "search",
            Category::Generate => "generate",
        }
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Category::ALL
            .iter()
            .find(|c| c.as_str() == lower)
            .copied()
            .ok_or_else(|| format!("unknown category '{s}'"))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for Category {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Category> for String {
    fn from(c: Category) -> String {
        c.as_str().to_string()
    }
}

/// Application domain of a tool. Thirteen labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Domain {
    Finance,
    Technology,
    Education,
    Healthcare,
    Entertainment,
    Travel,
    Business,
    Lifestyle,
    Science,
    Social,
    Sports,
    Environment,
    Culture,
}

impl Domain {
    pub const ALL: [Domain; 13] = [
        Domain::Finance,
        Domain::Technology,
        Domain::Education,
        Domain::Healthcare,
        Domain::Entertainment,
        Domain::Travel,
        Domain::Business,
        Domain::Lifestyle,
        Domain::Science,
        Domain::Social,
        Domain::Sports,
        Domain::Environment,
        Domain::Culture,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Domain::Finance => "finance",
            Domain::Technology => "technology",
            Domain::Education => "education",
            Domain::Healthcare => "healthcare",
            Domain::Entertainment => "entertainment",
            Domain::Travel => "travel",
            Domain::Business => "business",
            Domain::Lifestyle => "lifestyle",
            Domain::Science => "science",
            Domain::Social => "social",
            Domain::Sports => "sports",
            Domain::Environment => "environment",
            Domain::Culture => "culture",
        }
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Domain::ALL
            .iter()
            .find(|d| d.as_str() == lower)
            .copied()
            .ok_or_else(|| format!("unknown domain '{s}'"))
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for Domain {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Domain> for String {
    fn from(d: Domain) -> String {
        d.as_str().to_string()
    }
}

/// Which subset of the pool a tool definition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Fc,
    Ret,
    McpSo,
    McpUni,
    Train,
    Test,
    Synthetic,
}

impl Source {
    /// Train/test tools win precedence when duplicates span sources.
    pub fn is_constructed(&self) -> bool {
        matches!(self, Source::Train | Source::Test)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Fc => "fc",
            Source::Ret => "ret",
            Source::McpSo => "mcp-so",
            Source::McpUni => "mcp-uni",
            Source::Train => "train",
            Source::Test => "test",
            Source::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Recursive parameter schema of a tool: a type tag, a named property map,
/// and the list of required property names.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InputSchema {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub schema_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<IndexMap<String, PropertySchema>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required: Vec<String>,
    /// Keys we do not interpret (e.g. `additionalProperties`), kept so that
    /// records survive a round trip.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// One named parameter inside an [`InputSchema`], possibly nested.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PropertySchema {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub value_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<IndexMap<String, PropertySchema>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Box<PropertySchema>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// A normalized tool definition — the unit of the tool pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    #[serde(rename = "inputSchema", default, skip_serializing_if = "Option::is_none")]
    pub input_schema: Option<InputSchema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
}

impl ToolSpec {
    /// Text embedded for similarity purposes: `name: description`.
    pub fn embedding_text(&self) -> String {
        format!("{}: {}", self.name, self.description)
    }

    /// Checks the structural invariants that hold for every usable spec.
    /// Schema completeness is a separate concern (see `curation`).
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.name.trim().is_empty() {
            return Err(ModelError::malformed("tool name is empty"));
        }
        if let Some(schema) = &self.input_schema {
            let keys: Vec<&String> = schema
                .properties
                .as_ref()
                .map(|p| p.keys().collect())
                .unwrap_or_default();
            for req in &schema.required {
                if !keys.iter().any(|k| *k == req) {
                    return Err(ModelError::malformed(format!(
                        "tool '{}': required parameter '{req}' is not declared in properties",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A single tool invocation: a tool name plus an ordered argument map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionCall {
    pub name: String,
    #[serde(default)]
    pub arguments: Map<String, Value>,
}

impl FunctionCall {
    pub fn new(name: impl Into<String>) -> Self {
        FunctionCall { name: name.into(), arguments: Map::new() }
    }

    pub fn with_arg(mut self, key: impl Into<String>, value: Value) -> Self {
        self.arguments.insert(key.into(), value);
        self
    }
}

/// One element of a QAOA trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Query(String),
    Action(FunctionCall),
    Observation(String),
    Answer(String),
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Query(_) => "query",
            Event::Action(_) => "action",
            Event::Observation(_) => "observation",
            Event::Answer(_) => "answer",
        }
    }
}

/// Borrowed view of one turn: the query, its (call, observation) steps, and
/// the closing answer.
#[derive(Debug, Clone)]
pub struct Turn<'a> {
    pub index: usize,
    pub query: &'a str,
    pub steps: Vec<(&'a FunctionCall, &'a str)>,
    pub answer: &'a str,
}

impl<'a> Turn<'a> {
    pub fn calls(&self) -> Vec<&'a FunctionCall> {
        self.steps.iter().map(|(c, _)| *c).collect()
    }

    pub fn observations(&self) -> Vec<&'a str> {
        self.steps.iter().map(|(_, o)| *o).collect()
    }
}

/// An ordered trajectory of QAOA events plus the per-instance context that
/// travels with it on the wire: the system prompt and the candidate tools.
///
/// The candidate list is stored exactly as presented (a flat, ordered tool
/// list); the anchor/negative partition used while assembling it is not
/// representable on the wire (see `candidates::CandidateList`).
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaConversation {
    pub id: String,
    pub system_prompt: String,
    pub candidates: Vec<ToolSpec>,
    pub events: Vec<Event>,
    /// Optional benchmark/source tag used for per-subset reporting.
    pub source: Option<String>,
}

impl QaoaConversation {
    /// Enforces the QAOA turn grammar:
    ///
    /// - events begin with a Query;
    /// - every Action is followed by an Observation before the next Action
    ///   or Answer;
    /// - each turn ends with exactly one Answer;
    /// - there is at least one turn.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.events.is_empty() {
            return Err(ModelError::malformed("conversation has no events"));
        }
        #[derive(PartialEq)]
        enum St {
            Start,
            AfterQuery,
            AfterAction,
            AfterAnswer,
        }
        let mut state = St::Start;
        for (i, ev) in self.events.iter().enumerate() {
            let violation = |detail: &str| ModelError::RoleOrderViolation {
                index: i,
                detail: detail.to_string(),
            };
            state = match (state, ev) {
                (St::Start, Event::Query(_)) => St::AfterQuery,
                (St::Start, other) => {
                    return Err(violation(&format!(
                        "events must begin with a query, found {}",
                        other.kind()
                    )))
                }
                (St::AfterAnswer, Event::Query(_)) => St::AfterQuery,
                (St::AfterQuery, Event::Action(_)) => St::AfterAction,
                (St::AfterQuery, Event::Answer(_)) => St::AfterAnswer,
                (St::AfterAction, Event::Observation(_)) => St::AfterQuery,
                (St::AfterAction, other) => {
                    return Err(violation(&format!(
                        "action must be followed by an observation, found {}",
                        other.kind()
                    )))
                }
                (St::AfterAnswer, other) => {
                    return Err(violation(&format!(
                        "answer must be followed by a new query, found {}",
                        other.kind()
                    )))
                }
                (St::AfterQuery, other) => {
                    return Err(violation(&format!(
                        "unexpected {} after query/observation",
                        other.kind()
                    )))
                }
            };
        }
        if state != St::AfterAnswer {
            return Err(ModelError::RoleOrderViolation {
                index: self.events.len() - 1,
                detail: "conversation must end with an answer".to_string(),
            });
        }
        Ok(())
    }

    /// Index ranges of the turn partition. Every event belongs to exactly
    /// one range; a new turn begins at each Query.
    pub fn turn_spans(&self) -> Vec<std::ops::Range<usize>> {
        let mut spans = Vec::new();
        let mut start = 0usize;
        for (i, ev) in self.events.iter().enumerate() {
            if matches!(ev, Event::Query(_)) && i != start && i != 0 {
                spans.push(start..i);
                start = i;
            }
        }
        if !self.events.is_empty() {
            spans.push(start..self.events.len());
        }
        spans
    }

    /// Structured turn views. Call `validate` first; on an invalid event
    /// sequence the step pairing is best-effort.
    pub fn turns(&self) -> Vec<Turn<'_>> {
        let mut turns = Vec::new();
        for (index, span) in self.turn_spans().into_iter().enumerate() {
            let events = &self.events[span];
            let mut query = "";
            let mut answer = "";
            let mut steps = Vec::new();
            let mut pending: Option<&FunctionCall> = None;
            for ev in events {
                match ev {
                    Event::Query(q) => query = q,
                    Event::Action(call) => pending = Some(call),
                    Event::Observation(obs) => {
                        if let Some(call) = pending.take() {
                            steps.push((call, obs.as_str()));
                        }
                    }
                    Event::Answer(a) => answer = a,
                }
            }
            turns.push(Turn { index, query, steps, answer });
        }
        turns
    }

    /// All gold calls in event order, across turns.
    pub fn all_calls(&self) -> Vec<&FunctionCall> {
        self.events
            .iter()
            .filter_map(|ev| match ev {
                Event::Action(call) => Some(call),
                _ => None,
            })
            .collect()
    }

    /// Distinct names of tools invoked by the gold trajectory, first-use order.
    pub fn ground_truth_tool_names(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for call in self.all_calls() {
            if !seen.iter().any(|n| n == &call.name) {
                seen.push(call.name.clone());
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn query(s: &str) -> Event {
        Event::Query(s.to_string())
    }

    fn answer(s: &str) -> Event {
        Event::Answer(s.to_string())
    }

    fn action(name: &str) -> Event {
        Event::Action(FunctionCall::new(name))
    }

    fn obs(s: &str) -> Event {
        Event::Observation(s.to_string())
    }

    fn conv(events: Vec<Event>) -> QaoaConversation {
        QaoaConversation {
            id: "t".to_string(),
            system_prompt: String::new(),
            candidates: Vec::new(),
            events,
            source: None,
        }
    }

    #[test]
    fn labels_parse_case_insensitively() {
        assert_eq!("Operations".parse::<Category>().unwrap(), Category::Operations);
        assert_eq!("HEALTHCARE".parse::<Domain>().unwrap(), Domain::Healthcare);
        assert!("weather".parse::<Category>().is_err());
        assert_eq!(Category::ALL.len(), 6);
        assert_eq!(Domain::ALL.len(), 13);
    }

    #[test]
    fn tool_spec_requires_declared_parameters() {
        let tool: ToolSpec = serde_json::from_value(json!({
            "name": "t",
            "description": "d",
            "inputSchema": {"type": "object", "properties": {}, "required": ["x"]}
        }))
        .unwrap();
        assert!(tool.validate().is_err());
    }

    #[test]
    fn minimal_conversation_validates() {
        let c = conv(vec![query("q"), action("f"), obs("o"), answer("a")]);
        c.validate().unwrap();
        let turns = c.turns();
        assert_eq!(turns.len(), 1);
        assert_eq!(turns[0].steps.len(), 1);
    }

    #[test]
    fn query_and_answer_only_turn_is_legal() {
        conv(vec![query("q"), answer("a")]).validate().unwrap();
    }

    #[test]
    fn grammar_violations_report_index() {
        let c = conv(vec![obs("o")]);
        match c.validate() {
            Err(ModelError::RoleOrderViolation { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected role order violation, got {other:?}"),
        }

        let c = conv(vec![query("q"), action("f"), action("g"), obs("o"), answer("a")]);
        match c.validate() {
            Err(ModelError::RoleOrderViolation { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected role order violation, got {other:?}"),
        }

        let c = conv(vec![query("q"), action("f"), obs("o")]);
        assert!(c.validate().is_err());

        let c = conv(vec![query("q"), answer("a"), answer("b")]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn turn_partition_is_total_and_disjoint() {
        let c = conv(vec![
            query("q1"),
            action("f"),
            obs("o1"),
            answer("a1"),
            query("q2"),
            answer("a2"),
            query("q3"),
            action("g"),
            obs("o2"),
            answer("a3"),
        ]);
        c.validate().unwrap();
        let spans = c.turn_spans();
        assert_eq!(spans.len(), 3);
        let mut covered = 0;
        for span in &spans {
            assert_eq!(span.start, covered);
            covered = span.end;
        }
        assert_eq!(covered, c.events.len());
    }

    #[test]
    fn ground_truth_names_dedup_in_first_use_order() {
        let c = conv(vec![
            query("q"),
            action("b"),
            obs("o"),
            action("a"),
            obs("o"),
            action("b"),
            obs("o"),
            answer("r"),
        ]);
        assert_eq!(c.ground_truth_tool_names(), vec!["b".to_string(), "a".to_string()]);
    }
}
