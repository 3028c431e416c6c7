use std::collections::HashMap;

use super::{MealyMachine, Transition};

/// Groups states by a signature, numbering groups in order of first appearance.
fn number_blocks<K: std::hash::Hash + Eq>(signatures: impl Iterator<Item = K>) -> (Vec<usize>, usize) {
    let mut ids: HashMap<K, usize> = HashMap::new();
    let blocks: Vec<usize> = signatures
        .map(|sig| {
            let next = ids.len();
            *ids.entry(sig).or_insert(next)
        })
        .collect();
    (blocks, ids.len())
}

/// Computes the coarsest partition of states into behaviourally equivalent
/// blocks. Returns the block of every state and the number of blocks.
pub(crate) fn equivalence_blocks(m: &MealyMachine) -> (Vec<usize>, usize) {
    let n = m.state_count();
    let k = m.inputs().len();

    let (mut blocks, mut count) =
        number_blocks((0..n).map(|s| (0..k).map(|a| m.transition(s, a).output).collect::<Vec<_>>()));

    // Refine by the blocks of successor states until no block splits.
    loop {
        let (refined, refined_count) = number_blocks((0..n).map(|s| {
            let mut sig = Vec::with_capacity(k + 1);
            sig.push(blocks[s]);
            sig.extend((0..k).map(|a| blocks[m.transition(s, a).target]));
            sig
        }));
        blocks = refined;
        if refined_count == count {
            return (blocks, count);
        }
        count = refined_count;
    }
}

/// Returns the minimal machine with the same input/output behaviour.
///
/// The result is canonically numbered, so `minimize(&minimize(m)) == minimize(m)`.
pub fn minimize(m: &MealyMachine) -> MealyMachine {
    let k = m.inputs().len();
    let (blocks, count) = equivalence_blocks(m);

    let mut representative = vec![usize::MAX; count];
    for (state, &b) in blocks.iter().enumerate() {
        if representative[b] == usize::MAX {
            representative[b] = state;
        }
    }
    let mut table = Vec::with_capacity(count * k);
    for &rep in &representative {
        for a in 0..k {
            let t = m.transition(rep, a);
            table.push(Transition {
                target: blocks[t.target],
                output: t.output,
            });
        }
    }
    MealyMachine::from_table(m.inputs().to_vec(), m.outputs().to_vec(), blocks[m.initial_state()], table)
        .expect("quotient of a valid machine is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{symbols, TransitionSpec};

    #[test]
    fn merges_duplicated_states() {
        // States 0 and 1 behave identically (both emit x and alternate).
        let ts = vec![
            TransitionSpec::new(0, "a", 1, "x").unwrap(),
            TransitionSpec::new(1, "a", 0, "x").unwrap(),
        ];
        let m = MealyMachine::new(symbols(&["a"]), symbols(&["x"]), 2, 0, ts).unwrap();
        let min = minimize(&m);
        assert_eq!(min.state_count(), 1);
        assert_eq!(minimize(&min), min);
    }

    #[test]
    fn keeps_distinguishable_states() {
        // 0 -a/x-> 1 -a/x-> 2 -a/y-> 2: all three states differ.
        let ts = vec![
            TransitionSpec::new(0, "a", 1, "x").unwrap(),
            TransitionSpec::new(1, "a", 2, "x").unwrap(),
            TransitionSpec::new(2, "a", 2, "y").unwrap(),
        ];
        let m = MealyMachine::new(symbols(&["a"]), symbols(&["x", "y"]), 3, 0, ts).unwrap();
        assert_eq!(minimize(&m).state_count(), 3);
    }
}
