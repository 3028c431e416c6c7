use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::automata::{alphabet_difference, distinguishing_words, MealyMachine, Symbol, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub inputs: Vec<Symbol>,
    pub outputs_a: Vec<Symbol>,
    pub outputs_b: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphabetDiff {
    pub only_a: Vec<Symbol>,
    pub only_b: Vec<Symbol>,
}

/// Behavioural difference between two models on their shared inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub verdict: Verdict,
    /// Shortest first; empty iff the verdict is `equivalent`.
    pub witnesses: Vec<Witness>,
    pub state_counts: [usize; 2],
    pub alphabet_diff: AlphabetDiff,
}

impl DiffReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let verdict = match self.verdict {
            Verdict::Equivalent => "equivalent",
            Verdict::Distinguished => "distinguished",
        };
        let _ = writeln!(out, "verdict: {verdict}");
        let _ = writeln!(out, "states: {} vs {}", self.state_counts[0], self.state_counts[1]);
        let list = |syms: &[Symbol]| syms.iter().map(Symbol::as_str).collect::<Vec<_>>().join(", ");
        if !self.alphabet_diff.only_a.is_empty() {
            let _ = writeln!(out, "inputs only in a: {}", list(&self.alphabet_diff.only_a));
        }
        if !self.alphabet_diff.only_b.is_empty() {
            let _ = writeln!(out, "inputs only in b: {}", list(&self.alphabet_diff.only_b));
        }
        for (i, w) in self.witnesses.iter().enumerate() {
            let _ = writeln!(out, "witness {}: {}", i + 1, list(&w.inputs));
            let _ = writeln!(out, "  a: {}", list(&w.outputs_a));
            let _ = writeln!(out, "  b: {}", list(&w.outputs_b));
        }
        out
    }
}

/// Compares two machines on the inputs they share (in `a`'s order).
///
/// Collects up to `max_witnesses` (at least one) shortest disagreeing input
/// words, at most one per product state where the disagreement occurs.
pub fn diff(a: &MealyMachine, b: &MealyMachine, max_witnesses: usize) -> DiffReport {
    let (only_a, only_b) = alphabet_difference(a.inputs(), b.inputs());
    let shared: Vec<(usize, usize)> = a
        .inputs()
        .iter()
        .enumerate()
        .filter_map(|(ia, sym)| b.input_index(sym).map(|ib| (ia, ib)))
        .collect();
    let words = distinguishing_words(
        a,
        b,
        (a.initial_state(), b.initial_state()),
        &shared,
        max_witnesses.max(1),
    );
    let witnesses: Vec<Witness> = words
        .into_iter()
        .map(|word| {
            let inputs: Vec<Symbol> = word.into_iter().map(|pos| a.inputs()[shared[pos].0].clone()).collect();
            Witness {
                outputs_a: a.run(&inputs).expect("shared input"),
                outputs_b: b.run(&inputs).expect("shared input"),
                inputs,
            }
        })
        .collect();
    DiffReport {
        verdict: if witnesses.is_empty() {
            Verdict::Equivalent
        } else {
            Verdict::Distinguished
        },
        witnesses,
        state_counts: [a.state_count(), b.state_count()],
        alphabet_diff: AlphabetDiff { only_a, only_b },
    }
}
