//! Brute-force oracles and generators shared by the integration tests.
//!
//! Nothing here calls the library's own equivalence, minimization or search
//! code; the oracles enumerate words or refine partitions directly over the
//! public transition table.
#![allow(dead_code)]

use std::collections::HashMap;

use proptest::prelude::*;
use statelearn::automata::{MealyMachine, Symbol, Transition};
use statelearn::trace::{zip_steps, LogHeader, TraceLog, TraceSource};

pub fn named(prefix: &str, n: usize) -> Vec<Symbol> {
    (0..n).map(|i| Symbol::new(&format!("{prefix}{i}")).unwrap()).collect()
}

fn machine_from(k: usize, m: usize, cells: Vec<(usize, usize)>) -> MealyMachine {
    let table = cells
        .into_iter()
        .map(|(target, output)| Transition { target, output })
        .collect();
    MealyMachine::from_table(named("i", k), named("o", m), 0, table).unwrap()
}

fn cells(n: usize, k: usize, m: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..n, 0..m), n * k)
}

/// Random complete machine with 1..=6 states, 1..=4 inputs, 1..=3 outputs.
pub fn machine() -> impl Strategy<Value = MealyMachine> {
    (1usize..=6, 1usize..=4, 1usize..=3)
        .prop_flat_map(|(n, k, m)| cells(n, k, m).prop_map(move |c| machine_from(k, m, c)))
}

/// Two random machines over the same alphabets.
pub fn machine_pair() -> impl Strategy<Value = (MealyMachine, MealyMachine)> {
    (1usize..=6, 1usize..=6, 1usize..=4, 1usize..=3).prop_flat_map(|(n1, n2, k, m)| {
        (cells(n1, k, m), cells(n2, k, m))
            .prop_map(move |(c1, c2)| (machine_from(k, m, c1), machine_from(k, m, c2)))
    })
}

/// A machine and a copy with one transition redirected or relabelled; these
/// pairs tend to differ only on long words.
pub fn near_pair() -> impl Strategy<Value = (MealyMachine, MealyMachine)> {
    (1usize..=6, 1usize..=4, 1usize..=3).prop_flat_map(|(n, k, m)| {
        (cells(n, k, m), 0..n * k, 0..n, 0..m).prop_map(move |(c, slot, target, output)| {
            let mut changed = c.clone();
            changed[slot] = (target, output);
            (machine_from(k, m, c), machine_from(k, m, changed))
        })
    })
}

/// Moore refinement on the disjoint union of two machines over the same
/// input names. Returns whether the initial states end up in one block.
pub fn oracle_equivalent(m1: &MealyMachine, m2: &MealyMachine) -> bool {
    let blocks = union_blocks(&[m1, m2]);
    blocks[m1.initial_state()] == blocks[m1.state_count() + m2.initial_state()]
}

/// Number of behaviourally distinct reachable states.
pub fn oracle_class_count(m: &MealyMachine) -> usize {
    let blocks = union_blocks(&[m]);
    let mut distinct = blocks.clone();
    distinct.sort_unstable();
    distinct.dedup();
    distinct.len()
}

fn union_blocks(machines: &[&MealyMachine]) -> Vec<usize> {
    let names: Vec<Symbol> = machines[0].inputs().to_vec();
    // (machine, state) flattened; successors and outputs by input name.
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut outs: Vec<Vec<String>> = Vec::new();
    let mut offset = 0;
    for m in machines {
        for s in 0..m.state_count() {
            let mut row_succ = Vec::new();
            let mut row_out = Vec::new();
            for name in &names {
                let (to, out) = m.step(s, name).unwrap();
                row_succ.push(offset + to);
                row_out.push(out.as_str().to_string());
            }
            succ.push(row_succ);
            outs.push(row_out);
        }
        offset += m.state_count();
    }
    let mut block: Vec<usize> = {
        let mut ids: HashMap<&Vec<String>, usize> = HashMap::new();
        outs.iter()
            .map(|o| {
                let next = ids.len();
                *ids.entry(o).or_insert(next)
            })
            .collect()
    };
    loop {
        let mut ids: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let refined: Vec<usize> = (0..succ.len())
            .map(|s| {
                let sig = (block[s], succ[s].iter().map(|&t| block[t]).collect());
                let next = ids.len();
                *ids.entry(sig).or_insert(next)
            })
            .collect();
        let before = block.iter().copied().max().unwrap_or(0);
        let after = refined.iter().copied().max().unwrap_or(0);
        block = refined;
        if after == before {
            return block;
        }
    }
}

/// All words of exactly `len` symbols, in lexicographic order of `alphabet`.
pub fn words_of_len(alphabet: &[Symbol], len: usize) -> Vec<Vec<Symbol>> {
    let mut words = vec![Vec::new()];
    for _ in 0..len {
        words = words
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |a| {
                    let mut next = w.clone();
                    next.push(a.clone());
                    next
                })
            })
            .collect();
    }
    words
}

/// Shortest word (ties broken by `m1`'s input order) on which the machines
/// answer differently, searching lengths up to `max_len`.
pub fn brute_shortest_witness(m1: &MealyMachine, m2: &MealyMachine, max_len: usize) -> Option<Vec<Symbol>> {
    (1..=max_len).find_map(|len| {
        words_of_len(m1.inputs(), len)
            .into_iter()
            .find(|w| m1.run(w).unwrap() != m2.run(w).unwrap())
    })
}

/// Log of `words` replayed on `model`.
pub fn log_from_words(model: &MealyMachine, words: &[Vec<Symbol>]) -> TraceLog {
    let mut log = TraceLog::new(LogHeader::manual("oracle"));
    for w in words {
        log.push(TraceSource::Manual, zip_steps(w, &model.run(w).unwrap()), false);
    }
    log
}

/// Every input word of length `depth`, replayed on `model`.
pub fn exhaustive_log(model: &MealyMachine, depth: usize) -> TraceLog {
    log_from_words(model, &words_of_len(model.inputs(), depth))
}
