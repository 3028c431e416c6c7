//! Text formats for machines: the lossless `model-json` schema and a
//! Graphviz rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AutomataError, MealyMachine, Symbol, TransitionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Json,
    Dot,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    input_alphabet: Vec<Symbol>,
    output_alphabet: Vec<Symbol>,
    state_count: usize,
    initial_state: usize,
    transitions: Vec<TransitionJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionJson {
    from: usize,
    input: Symbol,
    to: usize,
    output: Symbol,
}

pub fn serialize(machine: &MealyMachine, format: ModelFormat) -> String {
    match format {
        ModelFormat::Json => to_json(machine),
        ModelFormat::Dot => to_dot(machine),
    }
}

/// Renders the machine as pretty-printed model-json with transitions sorted
/// by source state and input alphabet order.
pub fn to_json(machine: &MealyMachine) -> String {
    let doc = ModelJson {
        input_alphabet: machine.inputs().to_vec(),
        output_alphabet: machine.outputs().to_vec(),
        state_count: machine.state_count(),
        initial_state: machine.initial_state(),
        transitions: machine
            .transitions()
            .map(|(from, input, to, output)| TransitionJson {
                from,
                input: input.clone(),
                to,
                output: output.clone(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model serialization cannot fail");
    text.push('\n');
    text
}

/// Parses and validates a model-json document.
pub fn parse(text: &str) -> Result<MealyMachine, AutomataError> {
    let doc: ModelJson = serde_json::from_str(text).map_err(|e| AutomataError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    MealyMachine::new(
        doc.input_alphabet,
        doc.output_alphabet,
        doc.state_count,
        doc.initial_state,
        doc.transitions.into_iter().map(|t| TransitionSpec {
            from: t.from,
            input: t.input,
            to: t.to,
            output: t.output,
        }),
    )
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering with one edge per transition labelled `input / output`.
pub fn to_dot(machine: &MealyMachine) -> String {
    to_dot_with(machine, |state| (state.to_string(), false))
}

/// Graphviz rendering with caller-provided node labels; `filled` nodes are shaded.
pub(crate) fn to_dot_with(machine: &MealyMachine, node: impl Fn(usize) -> (String, bool)) -> String {
    let mut out = String::new();
    out.push_str("digraph mealy {\n");
    out.push_str("    rankdir=LR;\n");
    out.push_str("    node [shape=circle];\n");
    out.push_str("    __start [shape=point, style=invis];\n");
    for state in 0..machine.state_count() {
        let (label, filled) = node(state);
        let style = if filled { ", style=filled, fillcolor=lightblue" } else { "" };
        let _ = writeln!(out, "    {state} [label=\"{}\"{style}];", dot_escape(&label));
    }
    let _ = writeln!(out, "    __start -> {};", machine.initial_state());
    for (from, input, to, output) in machine.transitions() {
        let _ = writeln!(
            out,
            "    {from} -> {to} [label=\"{} / {}\"];",
            dot_escape(input.as_str()),
            dot_escape(output.as_str())
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::symbols;

    fn single_loop() -> MealyMachine {
        MealyMachine::new(
            symbols(&["PING"]),
            symbols(&["PONG"]),
            1,
            0,
            vec![TransitionSpec::new(0, "PING", 0, "PONG").unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn dot_has_one_labelled_edge_for_single_loop() {
        let dot = serialize(&single_loop(), ModelFormat::Dot);
        assert!(dot.starts_with("digraph"));
        let edges: Vec<_> = dot.lines().filter(|l| l.contains("->") && l.contains("label=")).collect();
        assert_eq!(edges, vec!["    0 -> 0 [label=\"PING / PONG\"];"]);
        assert!(dot.contains("__start -> 0;"));
    }

    #[test]
    fn json_round_trip() {
        let m = single_loop();
        assert_eq!(parse(&to_json(&m)).unwrap(), m);
    }

    #[test]
    fn schema_errors_carry_position() {
        let err = parse("{\n  \"input_alphabet\": [\"A\"]\n}").unwrap_err();
        match err {
            AutomataError::Json { line, message, .. } => {
                assert!(line >= 1);
                assert!(message.contains("output_alphabet"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse("{\"input_alphabet\": [\"A B\"]}").unwrap_err();
        assert!(matches!(err, AutomataError::Json { .. }));
    }
}
