use std::collections::HashMap;

use serde::Serialize;

use crate::automata::Symbol;
use crate::sut::SutSession;

use super::ActiveError;

const NONE: u32 = u32::MAX;

/// Counters for the traffic actually sent to the SUT.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueryStats {
    /// Queries that had to go to the SUT (one reset each).
    pub resets: u64,
    /// Input symbols sent to the SUT.
    pub symbols: u64,
    /// Queries answered entirely from the cache.
    pub cache_hits: u64,
}

/// Output-query front end for a SUT with a prefix-tree cache.
///
/// Every observed word is stored in a trie, so any prefix of an earlier query
/// is answered without touching the SUT. Re-observing a word with different
/// outputs aborts with [`ActiveError::Nondeterministic`].
pub struct QueryOracle<'a> {
    sut: &'a mut dyn SutSession,
    alphabet: Vec<Symbol>,
    input_ids: HashMap<Symbol, usize>,
    outputs: Vec<Symbol>,
    output_ids: HashMap<Symbol, u32>,
    /// `children[node * k + a]`, `NONE` when unexplored.
    children: Vec<u32>,
    edge_output: Vec<u32>,
    stats: QueryStats,
}

impl<'a> QueryOracle<'a> {
    pub fn new(sut: &'a mut dyn SutSession, alphabet: &[Symbol]) -> Result<Self, ActiveError> {
        if alphabet.is_empty() {
            return Err(ActiveError::EmptyAlphabet);
        }
        let mut input_ids = HashMap::new();
        for (i, sym) in alphabet.iter().enumerate() {
            if input_ids.insert(sym.clone(), i).is_some() {
                return Err(ActiveError::Config(format!("symbol {sym} listed twice in the alphabet")));
            }
            if !sut.descriptor().inputs.contains(sym) {
                return Err(ActiveError::Config(format!(
                    "symbol {sym} is not accepted by {}",
                    sut.descriptor().name
                )));
            }
        }
        let k = alphabet.len();
        Ok(QueryOracle {
            sut,
            alphabet: alphabet.to_vec(),
            input_ids,
            outputs: Vec::new(),
            output_ids: HashMap::new(),
            children: vec![NONE; k],
            edge_output: vec![NONE; k],
            stats: QueryStats::default(),
        })
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn stats(&self) -> QueryStats {
        self.stats
    }

    pub fn output_symbol(&self, id: u32) -> &Symbol {
        &self.outputs[id as usize]
    }

    pub(crate) fn encode(&self, word: &[Symbol]) -> Result<Vec<usize>, ActiveError> {
        word.iter()
            .map(|s| {
                self.input_ids
                    .get(s)
                    .copied()
                    .ok_or_else(|| ActiveError::Config(format!("symbol {s} is not in the learning alphabet")))
            })
            .collect()
    }

    pub(crate) fn decode(&self, word: &[usize]) -> Vec<Symbol> {
        word.iter().map(|&a| self.alphabet[a].clone()).collect()
    }

    fn k(&self) -> usize {
        self.alphabet.len()
    }

    fn output_id(&mut self, sym: &Symbol) -> u32 {
        if let Some(&id) = self.output_ids.get(sym) {
            return id;
        }
        let id = self.outputs.len() as u32;
        self.outputs.push(sym.clone());
        self.output_ids.insert(sym.clone(), id);
        id
    }

    /// Cached outputs for `word`, if every step has been observed.
    pub(crate) fn lookup(&self, word: &[usize]) -> Option<Vec<u32>> {
        let k = self.k();
        let mut node = 0usize;
        let mut out = Vec::with_capacity(word.len());
        for &a in word {
            let slot = node * k + a;
            if self.children[slot] == NONE {
                return None;
            }
            out.push(self.edge_output[slot]);
            node = self.children[slot] as usize;
        }
        Some(out)
    }

    /// Child of `node` on input `a` with its output, if observed.
    pub(crate) fn edge(&self, node: usize, a: usize) -> Option<(usize, u32)> {
        let slot = node * self.k() + a;
        (self.children[slot] != NONE).then(|| (self.children[slot] as usize, self.edge_output[slot]))
    }

    /// Output ids for `word`, querying the SUT on a cache miss.
    pub(crate) fn query_ids(&mut self, word: &[usize]) -> Result<Vec<u32>, ActiveError> {
        if let Some(out) = self.lookup(word) {
            self.stats.cache_hits += 1;
            return Ok(out);
        }
        let symbols = self.decode(word);
        let observed = self.sut.run_trace(&symbols)?;
        self.stats.resets += 1;
        self.stats.symbols += word.len() as u64;
        if observed.len() != word.len() {
            return Err(ActiveError::Config(format!(
                "SUT returned {} outputs for {} inputs",
                observed.len(),
                word.len()
            )));
        }
        let ids: Vec<u32> = observed.iter().map(|o| self.output_id(o)).collect();

        let k = self.k();
        let mut node = 0usize;
        for (i, (&a, &out)) in word.iter().zip(&ids).enumerate() {
            let slot = node * k + a;
            if self.children[slot] == NONE {
                let child = self.children.len() / k;
                self.children[slot] = child as u32;
                self.edge_output[slot] = out;
                self.children.extend(std::iter::repeat(NONE).take(k));
                self.edge_output.extend(std::iter::repeat(NONE).take(k));
            } else if self.edge_output[slot] != out {
                let prefix = &word[..=i];
                let cached = self.lookup(prefix).expect("prefix is cached");
                return Err(ActiveError::Nondeterministic {
                    word: self.decode(prefix),
                    first: cached.iter().map(|&o| self.outputs[o as usize].clone()).collect(),
                    second: observed[..=i].to_vec(),
                });
            }
            node = self.children[slot] as usize;
        }
        Ok(ids)
    }

    /// Outputs for a symbol word.
    pub fn query(&mut self, word: &[Symbol]) -> Result<Vec<Symbol>, ActiveError> {
        let encoded = self.encode(word)?;
        let ids = self.query_ids(&encoded)?;
        Ok(ids.into_iter().map(|o| self.outputs[o as usize].clone()).collect())
    }

    /// Output of the last symbol of `word` (which must be non-empty).
    pub fn last_output(&mut self, word: &[Symbol]) -> Result<Symbol, ActiveError> {
        self.query(word)?
            .pop()
            .ok_or_else(|| ActiveError::Config("empty membership query".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::symbols;
    use crate::sut::{open_builtin, SutDescriptor, SutError};

    #[test]
    fn prefixes_come_from_cache() {
        let mut sut = open_builtin("varA").unwrap();
        let alphabet = sut.descriptor().inputs.clone();
        let mut oracle = QueryOracle::new(&mut sut, &alphabet).unwrap();
        let out = oracle.query(&symbols(&["USER", "PASS", "LIST"])).unwrap();
        assert_eq!(out, symbols(&["R331", "R230", "R150"]));
        assert_eq!(oracle.query(&symbols(&["USER", "PASS"])).unwrap(), symbols(&["R331", "R230"]));
        assert_eq!(oracle.stats().resets, 1);
        assert_eq!(oracle.stats().symbols, 3);
        assert_eq!(oracle.stats().cache_hits, 1);
    }

    /// Answers USER with alternating outputs across resets.
    struct Flaky {
        descriptor: SutDescriptor,
        flips: u32,
    }

    impl SutSession for Flaky {
        fn descriptor(&self) -> &SutDescriptor {
            &self.descriptor
        }
        fn reset(&mut self) -> Result<(), SutError> {
            self.flips += 1;
            Ok(())
        }
        fn query(&mut self, _input: &Symbol) -> Result<Symbol, SutError> {
            Ok(Symbol::new(if self.flips % 2 == 0 { "EVEN" } else { "ODD" }).unwrap())
        }
    }

    #[test]
    fn nondeterminism_is_detected() {
        let mut sut = Flaky {
            descriptor: SutDescriptor {
                name: "flaky".into(),
                inputs: symbols(&["USER"]),
            },
            flips: 0,
        };
        let alphabet = symbols(&["USER"]);
        let mut oracle = QueryOracle::new(&mut sut, &alphabet).unwrap();
        oracle.query(&symbols(&["USER"])).unwrap();
        let err = oracle.query(&symbols(&["USER", "USER"])).unwrap_err();
        assert!(matches!(err, ActiveError::Nondeterministic { .. }), "{err}");
    }

    #[test]
    fn alphabet_must_be_accepted() {
        let mut sut = open_builtin("varA").unwrap();
        assert!(QueryOracle::new(&mut sut, &symbols(&["STOR"])).is_err());
        assert!(matches!(QueryOracle::new(&mut sut, &[]), Err(ActiveError::EmptyAlphabet)));
    }
}
