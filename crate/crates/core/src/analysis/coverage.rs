use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::automata::{to_dot_with, to_json, MealyMachine};
use crate::trace::TraceLog;

/// How much of a reference model a trace log exercises.
///
/// Traces are replayed from the initial state. A step is *divergent* when
/// its input is not in the model or its logged output differs from the
/// model's; the rest of that trace is then skipped. Divergent steps count
/// no hits and visit no transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub model_id: String,
    pub states_total: usize,
    pub states_visited: usize,
    pub transitions_total: usize,
    pub transitions_visited: usize,
    /// Replayed steps taken from each state (all states listed).
    pub per_state_hits: BTreeMap<usize, u64>,
    pub divergent_steps: u64,
    pub visited_states: Vec<usize>,
    pub traces: usize,
    /// Logged steps, divergent or not.
    pub steps: usize,
}

impl CoverageReport {
    pub fn state_fraction(&self) -> f64 {
        self.states_visited as f64 / self.states_total as f64
    }

    pub fn transition_fraction(&self) -> f64 {
        self.transitions_visited as f64 / self.transitions_total as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model {}", self.model_id);
        let _ = writeln!(out, "traces: {}, steps: {}", self.traces, self.steps);
        let _ = writeln!(
            out,
            "states visited: {}/{} ({:.1}%)",
            self.states_visited,
            self.states_total,
            100.0 * self.state_fraction()
        );
        let _ = writeln!(
            out,
            "transitions visited: {}/{} ({:.1}%)",
            self.transitions_visited,
            self.transitions_total,
            100.0 * self.transition_fraction()
        );
        let _ = writeln!(out, "divergent steps: {}", self.divergent_steps);
        for (state, hits) in &self.per_state_hits {
            let _ = writeln!(out, "  state {state}: {hits} hits");
        }
        out
    }
}

/// Short stable fingerprint of a model's canonical JSON form.
pub fn model_id(model: &MealyMachine) -> String {
    let digest = Sha256::digest(to_json(model).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn coverage(model: &MealyMachine, log: &TraceLog) -> CoverageReport {
    let k = model.inputs().len();
    let mut hits = vec![0u64; model.state_count()];
    let mut visited = vec![false; model.state_count()];
    let mut edges: HashSet<usize> = HashSet::new();
    let mut divergent = 0u64;
    if !log.is_empty() {
        visited[model.initial_state()] = true;
    }
    for trace in &log.entries {
        let mut state = model.initial_state();
        for step in &trace.steps {
            let Some(a) = model.input_index(&step.input) else {
                divergent += 1;
                break;
            };
            let t = model.transition(state, a);
            if model.outputs()[t.output] != step.output {
                divergent += 1;
                break;
            }
            hits[state] += 1;
            edges.insert(state * k + a);
            state = t.target;
            visited[state] = true;
        }
    }
    let visited_states: Vec<usize> = (0..model.state_count()).filter(|&s| visited[s]).collect();
    CoverageReport {
        model_id: model_id(model),
        states_total: model.state_count(),
        states_visited: visited_states.len(),
        transitions_total: model.transition_count(),
        transitions_visited: edges.len(),
        per_state_hits: hits.into_iter().enumerate().collect(),
        divergent_steps: divergent,
        visited_states,
        traces: log.len(),
        steps: log.total_steps(),
    }
}

/// Graphviz rendering of `model` with visited states filled and hit counts
/// in the node labels.
pub fn coverage_dot(model: &MealyMachine, report: &CoverageReport) -> String {
    to_dot_with(model, |state| {
        let hits = report.per_state_hits.get(&state).copied().unwrap_or(0);
        (format!("{state} ({hits})"), report.visited_states.contains(&state))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonVerdict {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzerComparison {
    pub a: CoverageReport,
    pub b: CoverageReport,
    pub verdict: ComparisonVerdict,
}

/// Ranks two logs against one model: more visited states wins, then more
/// visited transitions, then fewer logged steps.
pub fn compare_fuzzers(model: &MealyMachine, log_a: &TraceLog, log_b: &TraceLog) -> FuzzerComparison {
    let a = coverage(model, log_a);
    let b = coverage(model, log_b);
    let ordering = a
        .states_visited
        .cmp(&b.states_visited)
        .then(a.transitions_visited.cmp(&b.transitions_visited))
        .then(b.steps.cmp(&a.steps));
    let verdict = match ordering {
        Ordering::Greater => ComparisonVerdict::A,
        Ordering::Less => ComparisonVerdict::B,
        Ordering::Equal => ComparisonVerdict::Tie,
    };
    FuzzerComparison { a, b, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::symbols;
    use crate::sut::Variant;
    use crate::trace::{zip_steps, LogHeader, TraceSource};

    fn log_of(traces: &[(&[&str], &[&str])]) -> TraceLog {
        let mut log = TraceLog::new(LogHeader::manual("test"));
        for (i, o) in traces {
            log.push(TraceSource::Manual, zip_steps(&symbols(i), &symbols(o)), false);
        }
        log
    }

    #[test]
    fn empty_log_visits_nothing() {
        let report = coverage(&Variant::A.model(), &log_of(&[]));
        assert_eq!((report.states_visited, report.states_total), (0, 5));
        assert_eq!(report.transitions_visited, 0);
    }

    #[test]
    fn empty_trace_visits_initial_state() {
        let report = coverage(&Variant::A.model(), &log_of(&[(&[], &[])]));
        assert_eq!(report.visited_states, vec![0]);
    }

    #[test]
    fn variant_a_example_log() {
        let log = log_of(&[
            (&["USER"], &["R331"]),
            (&["USER", "PASS", "LIST"], &["R331", "R230", "R150"]),
        ]);
        let report = coverage(&Variant::A.model(), &log);
        assert_eq!((report.states_visited, report.states_total), (3, 5));
        assert_eq!((report.transitions_visited, report.transitions_total), (3, 35));
        assert_eq!(report.divergent_steps, 0);
        // Hits: q0 twice (USER), q1 once (PASS), q2 once (LIST).
        assert_eq!(report.per_state_hits.values().sum::<u64>(), 4);
    }

    #[test]
    fn divergence_stops_the_walk() {
        let log = log_of(&[(&["USER", "PASS", "LIST"], &["R331", "R530", "R150"]), (&["NOPE"], &["R500"])]);
        let report = coverage(&Variant::A.model(), &log);
        assert_eq!(report.divergent_steps, 2);
        assert_eq!(report.states_visited, 2);
        assert_eq!(report.transitions_visited, 1);
    }

    #[test]
    fn comparison_tie_breaks() {
        let model = Variant::A.model();
        let short = log_of(&[(&["USER"], &["R331"])]);
        let long = log_of(&[(&["USER", "USER"], &["R331", "R331"])]);
        assert_eq!(compare_fuzzers(&model, &short, &short).verdict, ComparisonVerdict::Tie);
        // Same states; the second log also covers the USER self-loop in q1.
        assert_eq!(compare_fuzzers(&model, &long, &short).verdict, ComparisonVerdict::A);
        let padded = log_of(&[(&["USER"], &["R331"]), (&["USER"], &["R331"])]);
        assert_eq!(compare_fuzzers(&model, &padded, &short).verdict, ComparisonVerdict::B);
    }

    #[test]
    fn annotated_dot_marks_visited() {
        let model = Variant::A.model();
        let report = coverage(&model, &log_of(&[(&["USER"], &["R331"])]));
        let dot = coverage_dot(&model, &report);
        assert!(dot.contains("0 [label=\"0 (1)\", style=filled"));
        assert!(dot.contains("2 [label=\"2 (0)\"];"));
    }
}
