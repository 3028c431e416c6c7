use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{AutomataError, MealyMachine, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Equivalent,
    Distinguished,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceResult {
    pub verdict: Verdict,
    /// Shortest distinguishing input word; present iff `verdict` is `Distinguished`.
    pub witness: Option<Vec<Symbol>>,
}

impl EquivalenceResult {
    pub fn is_equivalent(&self) -> bool {
        self.verdict == Verdict::Equivalent
    }
}

/// Breadth-first search over the synchronous product of two machines.
///
/// Starts from `start`, a `(state of m1, state of m2)` pair. `inputs` lists
/// the shared inputs as `(index in m1, index in m2)` in the order they should
/// be tried. Returns, in shortest-then-lexicographic order, up to `limit`
/// words (as positions into `inputs`) whose last step is the first
/// disagreement, at most one per product pair.
pub(crate) fn distinguishing_words(
    m1: &MealyMachine,
    m2: &MealyMachine,
    start: (usize, usize),
    inputs: &[(usize, usize)],
    limit: usize,
) -> Vec<Vec<usize>> {
    let mut found = Vec::new();
    if limit == 0 {
        return found;
    }
    // pair -> (parent pair, input position) for path reconstruction
    let mut parent: HashMap<(usize, usize), Option<((usize, usize), usize)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);

    let path_to = |parent: &HashMap<(usize, usize), Option<((usize, usize), usize)>>, mut pair| {
        let mut word = Vec::new();
        while let Some(Some((prev, pos))) = parent.get(&pair) {
            word.push(*pos);
            pair = *prev;
        }
        word.reverse();
        word
    };

    while let Some(pair @ (s1, s2)) = queue.pop_front() {
        for (pos, &(a1, a2)) in inputs.iter().enumerate() {
            let t1 = m1.transition(s1, a1);
            let t2 = m2.transition(s2, a2);
            if m1.outputs()[t1.output] != m2.outputs()[t2.output] {
                let mut word = path_to(&parent, pair);
                word.push(pos);
                found.push(word);
                if found.len() == limit {
                    return found;
                }
                break;
            }
        }
        // Only agreeing steps extend a path, so every recorded word
        // disagrees for the first time at its last symbol.
        for (pos, &(a1, a2)) in inputs.iter().enumerate() {
            let (t1, t2) = (m1.transition(s1, a1), m2.transition(s2, a2));
            if m1.outputs()[t1.output] != m2.outputs()[t2.output] {
                continue;
            }
            let next = (t1.target, t2.target);
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(next) {
                e.insert(Some((pair, pos)));
                queue.push_back(next);
            }
        }
    }
    found
}

/// Symbols that occur in exactly one of the two alphabets, as `(only_left, only_right)`.
pub(crate) fn alphabet_difference(left: &[Symbol], right: &[Symbol]) -> (Vec<Symbol>, Vec<Symbol>) {
    let l: BTreeSet<&Symbol> = left.iter().collect();
    let r: BTreeSet<&Symbol> = right.iter().collect();
    (
        l.difference(&r).map(|s| (*s).clone()).collect(),
        r.difference(&l).map(|s| (*s).clone()).collect(),
    )
}

/// Decides whether two machines over the same input alphabet produce the
/// same outputs on every input word.
///
/// The witness is the shortest distinguishing word; ties are broken by
/// `m1`'s input alphabet order.
pub fn check_equivalence(m1: &MealyMachine, m2: &MealyMachine) -> Result<EquivalenceResult, AutomataError> {
    let (only_left, only_right) = alphabet_difference(m1.inputs(), m2.inputs());
    if !only_left.is_empty() || !only_right.is_empty() {
        return Err(AutomataError::AlphabetMismatch { only_left, only_right });
    }
    let inputs: Vec<(usize, usize)> = m1
        .inputs()
        .iter()
        .enumerate()
        .map(|(a1, sym)| (a1, m2.input_index(sym).expect("alphabets are equal")))
        .collect();
    let witness = distinguishing_words(m1, m2, (m1.initial_state(), m2.initial_state()), &inputs, 1).pop();
    Ok(match witness {
        None => EquivalenceResult {
            verdict: Verdict::Equivalent,
            witness: None,
        },
        Some(word) => EquivalenceResult {
            verdict: Verdict::Distinguished,
            witness: Some(word.into_iter().map(|pos| m1.inputs()[pos].clone()).collect()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{symbols, TransitionSpec};

    fn counter(period: usize) -> MealyMachine {
        // Emits "hit" every `period`-th input, "miss" otherwise.
        let ts = (0..period).map(|s| {
            let out = if s + 1 == period { "hit" } else { "miss" };
            TransitionSpec::new(s, "tick", (s + 1) % period, out).unwrap()
        });
        MealyMachine::new(symbols(&["tick"]), symbols(&["hit", "miss"]), period, 0, ts).unwrap()
    }

    #[test]
    fn reflexive() {
        let m = counter(3);
        assert!(check_equivalence(&m, &m).unwrap().is_equivalent());
    }

    #[test]
    fn witness_is_shortest() {
        let r = check_equivalence(&counter(2), &counter(3)).unwrap();
        assert_eq!(r.verdict, Verdict::Distinguished);
        assert_eq!(r.witness.unwrap(), symbols(&["tick", "tick"]));
    }

    #[test]
    fn alphabet_mismatch_lists_both_sides() {
        let other = MealyMachine::new(
            symbols(&["tock"]),
            symbols(&["hit"]),
            1,
            0,
            vec![TransitionSpec::new(0, "tock", 0, "hit").unwrap()],
        )
        .unwrap();
        match check_equivalence(&counter(2), &other) {
            Err(AutomataError::AlphabetMismatch { only_left, only_right }) => {
                assert_eq!(only_left, symbols(&["tick"]));
                assert_eq!(only_right, symbols(&["tock"]));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
