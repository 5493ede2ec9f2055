//! Interaction-structure classification: hop class per turn, turn class per
//! conversation, and serial/parallel routing inferred from value flow.
//!
//! Routing is not stored on the wire. A later call in a turn is *dependent*
//! when one of its argument values contains, verbatim, a value that first
//! appeared in an earlier observation of the same turn. A multi-call turn
//! where every later call is dependent routes serial; where none is,
//! parallel; otherwise mixed.

use serde::{Deserialize, Serialize};

use crate::synthesis::anchors::{collapse_ws, extract_anchors, text_contains_value, value_text};

use super::types::{QaoaConversation, Turn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopClass {
    SingleHop,
    MultiHop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnClass {
    SingleTurn,
    MultiTurn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routing {
    Serial,
    Parallel,
    Mixed,
    #[serde(rename = "n/a")]
    NotApplicable,
}

/// Structure label attached to a turn or a whole conversation. `hop_class`
/// is a per-turn notion (a conversation is multi-hop when any turn is);
/// `turn_class` is always the conversation's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructureLabel {
    pub hop_class: HopClass,
    pub turn_class: TurnClass,
    pub routing: Routing,
}

/// Conversation-level label plus one label per turn, in turn order.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub conversation: StructureLabel,
    pub turns: Vec<StructureLabel>,
}

/// Dependency flags for a turn's calls: `flags[k]` is true when call `k`
/// consumes a value first introduced by an earlier observation of the turn.
/// The first call is never dependent.
pub(crate) fn call_dependencies(turn: &Turn<'_>) -> Vec<bool> {
    let mut flags = vec![false; turn.steps.len()];
    // Accumulated collapsed text of everything before the event at hand,
    // used to decide whether an observation *introduces* a value.
    let mut seen = collapse_ws(turn.query);
    let mut introduced: Vec<String> = Vec::new();
    for (k, (call, obs)) in turn.steps.iter().enumerate() {
        let arg_texts: Vec<String> = call.arguments.values().map(value_text).collect();
        flags[k] = arg_texts
            .iter()
            .any(|arg| introduced.iter().any(|v| text_contains_value(arg, v)));
        seen.push(' ');
        seen.push_str(&collapse_ws(&call.name));
        for arg in &arg_texts {
            seen.push(' ');
            seen.push_str(&collapse_ws(arg));
        }
        for anchor in extract_anchors(obs) {
            if !seen.contains(&collapse_ws(&anchor)) && !introduced.contains(&anchor) {
                introduced.push(anchor);
            }
        }
        seen.push(' ');
        seen.push_str(&collapse_ws(obs));
    }
    flags
}

/// Routing of one turn, inferred from its dependency flags.
pub(crate) fn turn_routing(turn: &Turn<'_>) -> Routing {
    if turn.steps.len() <= 1 {
        return Routing::NotApplicable;
    }
    let deps = call_dependencies(turn);
    let later = &deps[1..];
    let dependent = later.iter().filter(|d| **d).count();
    if dependent == later.len() {
        Routing::Serial
    } else if dependent == 0 {
        Routing::Parallel
    } else {
        Routing::Mixed
    }
}

/// Classifies a conversation and each of its turns.
pub fn classify_structure(conv: &QaoaConversation) -> StructureReport {
    let turns = conv.turns();
    let turn_class = if turns.len() >= 2 { TurnClass::MultiTurn } else { TurnClass::SingleTurn };

    let mut per_turn = Vec::with_capacity(turns.len());
    let mut routings = Vec::new();
    let mut any_multi_hop = false;
    for turn in &turns {
        let hop_class =
            if turn.steps.len() >= 2 { HopClass::MultiHop } else { HopClass::SingleHop };
        any_multi_hop |= hop_class == HopClass::MultiHop;
        let routing = turn_routing(turn);
        if routing != Routing::NotApplicable {
            routings.push(routing);
        }
        per_turn.push(StructureLabel { hop_class, turn_class, routing });
    }

    let conversation_routing = if routings.is_empty() {
        Routing::NotApplicable
    } else if routings.iter().all(|r| *r == Routing::Serial) {
        Routing::Serial
    } else if routings.iter().all(|r| *r == Routing::Parallel) {
        Routing::Parallel
    } else {
        Routing::Mixed
    };

    StructureReport {
        conversation: StructureLabel {
            hop_class: if any_multi_hop { HopClass::MultiHop } else { HopClass::SingleHop },
            turn_class,
            routing: conversation_routing,
        },
        turns: per_turn,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Event, FunctionCall};
    use serde_json::json;

    fn conv(events: Vec<Event>) -> QaoaConversation {
        QaoaConversation {
            id: "t".to_string(),
            system_prompt: String::new(),
            candidates: Vec::new(),
            events,
            source: None,
        }
    }

    fn single_turn(steps: Vec<(FunctionCall, &str)>) -> QaoaConversation {
        let mut events = vec![Event::Query("please handle my request".to_string())];
        for (call, obs) in steps {
            events.push(Event::Action(call));
            events.push(Event::Observation(obs.to_string()));
        }
        events.push(Event::Answer("done".to_string()));
        conv(events)
    }

    #[test]
    fn minimal_trajectory_is_single_hop_single_turn() {
        let c = single_turn(vec![(FunctionCall::new("f"), "ok")]);
        let report = classify_structure(&c);
        assert_eq!(report.conversation.hop_class, HopClass::SingleHop);
        assert_eq!(report.conversation.turn_class, TurnClass::SingleTurn);
        assert_eq!(report.conversation.routing, Routing::NotApplicable);
        assert_eq!(report.turns.len(), 1);
    }

    #[test]
    fn observation_fed_argument_routes_serial() {
        let c = single_turn(vec![
            (FunctionCall::new("f"), r#"{"record_id": "REC4417"}"#),
            (FunctionCall::new("g").with_arg("target", json!("REC4417")), "ok"),
        ]);
        let report = classify_structure(&c);
        assert_eq!(report.conversation.hop_class, HopClass::MultiHop);
        assert_eq!(report.conversation.turn_class, TurnClass::SingleTurn);
        assert_eq!(report.conversation.routing, Routing::Serial);
        assert_eq!(report.turns[0].routing, Routing::Serial);
    }

    #[test]
    fn independent_calls_route_parallel() {
        let c = single_turn(vec![
            (FunctionCall::new("f").with_arg("x", json!("alpha")), r#"{"out_id": "Q99X1"}"#),
            (FunctionCall::new("g").with_arg("y", json!("beta")), "fine"),
        ]);
        assert_eq!(classify_structure(&c).turns[0].routing, Routing::Parallel);
    }

    #[test]
    fn mixed_when_both_patterns_occur() {
        let c = single_turn(vec![
            (FunctionCall::new("f"), r#"{"ref_id": "ZZ1234"}"#),
            (FunctionCall::new("g").with_arg("r", json!("ZZ1234")), "ok"),
            (FunctionCall::new("h").with_arg("s", json!("independent")), "ok"),
        ]);
        assert_eq!(classify_structure(&c).turns[0].routing, Routing::Mixed);
    }

    #[test]
    fn query_provided_values_are_not_dependencies() {
        // "CASE77" comes from the query, so the second call does not depend
        // on the first observation even though the text also repeats it.
        let c = conv(vec![
            Event::Query("look up CASE77 and fetch it".to_string()),
            Event::Action(FunctionCall::new("lookup").with_arg("case", json!("CASE77"))),
            Event::Observation(r#"{"case_id": "CASE77"}"#.to_string()),
            Event::Action(FunctionCall::new("fetch").with_arg("case", json!("CASE77"))),
            Event::Observation("data".to_string()),
            Event::Answer("done".to_string()),
        ]);
        assert_eq!(classify_structure(&c).turns[0].routing, Routing::Parallel);
    }

    #[test]
    fn three_turns_are_multi_turn_regardless_of_hops() {
        let mut events = Vec::new();
        for i in 0..3 {
            events.push(Event::Query(format!("q{i}")));
            events.push(Event::Action(FunctionCall::new("f")));
            events.push(Event::Observation("o".to_string()));
            events.push(Event::Answer(format!("a{i}")));
        }
        let report = classify_structure(&conv(events));
        assert_eq!(report.conversation.turn_class, TurnClass::MultiTurn);
        assert_eq!(report.turns.len(), 3);
        for t in &report.turns {
            assert_eq!(t.turn_class, TurnClass::MultiTurn);
            assert_eq!(t.hop_class, HopClass::SingleHop);
        }
    }

    #[test]
    fn classification_ignores_whitespace_only_observation_edits() {
        let build = |obs: &str| {
            single_turn(vec![
                (FunctionCall::new("f"), obs),
                (FunctionCall::new("g").with_arg("target", json!("REC4417")), "ok"),
            ])
        };
        let a = classify_structure(&build("{\"record_id\":  \"REC4417\"}"));
        let b = classify_structure(&build("{\"record_id\":\n\t\"REC4417\"}"));
        assert_eq!(a, b);
        assert_eq!(a.turns[0].routing, Routing::Serial);
    }
}
