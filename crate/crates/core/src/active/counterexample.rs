use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automata::{distinguishing_words, MealyMachine, Symbol};

use super::{ActiveError, EquivalenceConfig, EquivalenceMode, QueryOracle, QUERY_BUDGET};

/// Searches for an input word on which the SUT and `hypothesis` disagree.
///
/// A returned word always ends at its first disagreeing position.
pub fn find_counterexample(
    oracle: &mut QueryOracle<'_>,
    hypothesis: &MealyMachine,
    eq: &EquivalenceConfig,
) -> Result<Option<Vec<Symbol>>, ActiveError> {
    eq.validate()?;
    let alphabet = oracle.alphabet().to_vec();
    if hypothesis.inputs().len() != alphabet.len() {
        return Err(ActiveError::Config("hypothesis alphabet differs from the learning alphabet".into()));
    }
    let to_hyp = alphabet
        .iter()
        .map(|s| {
            hypothesis
                .input_index(s)
                .ok_or_else(|| ActiveError::Config(format!("hypothesis lacks input {s}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut search = Search {
        oracle,
        hypothesis,
        to_hyp,
    };
    let found = match eq.mode {
        EquivalenceMode::Exhaustive => search.exhaustive(eq.depth_bound)?,
        EquivalenceMode::WMethod => match w_method_size(hypothesis, eq.depth_bound) {
            Some(_) => search.w_method(eq.depth_bound)?,
            None => {
                warn!(
                    "w-method suite at depth {} exceeds {QUERY_BUDGET} queries, falling back to random walks",
                    eq.depth_bound
                );
                search.random_walk(eq.walk_count, eq.walk_length, eq.seed)?
            }
        },
        EquivalenceMode::RandomWalk => search.random_walk(eq.walk_count, eq.walk_length, eq.seed)?,
    };
    Ok(found.map(|w| search.oracle.decode(&w)))
}

/// Number of test words of the W-method suite, or `None` above the budget.
pub(crate) fn w_method_size(hypothesis: &MealyMachine, depth: usize) -> Option<u64> {
    let n = hypothesis.state_count() as u64;
    let k = hypothesis.inputs().len() as u64;
    let w = (n * n.saturating_sub(1) / 2).max(1);
    let mut middles: u64 = 0;
    let mut layer: u64 = 1;
    for _ in 0..=depth + 1 {
        middles = middles.checked_add(layer)?;
        layer = layer.checked_mul(k)?;
    }
    let total = n.checked_mul(middles)?.checked_mul(w)?;
    (total <= QUERY_BUDGET).then_some(total)
}

struct Search<'o, 'a, 'h> {
    oracle: &'o mut QueryOracle<'a>,
    hypothesis: &'h MealyMachine,
    /// Learning-alphabet index -> hypothesis input index.
    to_hyp: Vec<usize>,
}

impl Search<'_, '_, '_> {
    fn k(&self) -> usize {
        self.to_hyp.len()
    }

    /// Queries `word` and returns its shortest disagreeing prefix, if any.
    fn check(&mut self, word: &[usize]) -> Result<Option<Vec<usize>>, ActiveError> {
        let observed = self.oracle.query_ids(word)?;
        let mut state = self.hypothesis.initial_state();
        for (i, (&a, &out)) in word.iter().zip(&observed).enumerate() {
            let t = self.hypothesis.transition(state, self.to_hyp[a]);
            if self.hypothesis.outputs()[t.output] != *self.oracle.output_symbol(out) {
                return Ok(Some(word[..=i].to_vec()));
            }
            state = t.target;
        }
        Ok(None)
    }

    /// All words up to `depth`, reporting the shortest-then-lexicographic
    /// disagreement. Only maximal words are sent; shorter ones are prefixes.
    fn exhaustive(&mut self, depth: usize) -> Result<Option<Vec<usize>>, ActiveError> {
        let k = self.k();
        let queries = (k as u64)
            .checked_pow(depth as u32)
            .filter(|&q| q <= QUERY_BUDGET)
            .ok_or(ActiveError::Budget {
                alphabet: k,
                depth,
                limit: QUERY_BUDGET,
            })?;
        if depth == 0 {
            return Ok(None);
        }
        let mut word = vec![0usize; depth];
        for _ in 0..queries {
            self.oracle.query_ids(&word)?;
            // odometer increment, last position fastest
            for pos in (0..depth).rev() {
                word[pos] += 1;
                if word[pos] < k {
                    break;
                }
                word[pos] = 0;
            }
        }

        // BFS over the cached prefix tree alongside the hypothesis.
        struct Entry {
            node: usize,
            state: usize,
            parent: usize,
            input: usize,
            len: usize,
        }
        let mut entries = vec![Entry {
            node: 0,
            state: self.hypothesis.initial_state(),
            parent: usize::MAX,
            input: 0,
            len: 0,
        }];
        let mut head = 0;
        while head < entries.len() {
            let (node, state, len) = (entries[head].node, entries[head].state, entries[head].len);
            for a in 0..k {
                let (child, out) = self.oracle.edge(node, a).expect("all words up to depth are cached");
                let t = self.hypothesis.transition(state, self.to_hyp[a]);
                if self.hypothesis.outputs()[t.output] != *self.oracle.output_symbol(out) {
                    let mut w = vec![a];
                    let mut at = head;
                    while entries[at].parent != usize::MAX {
                        w.push(entries[at].input);
                        at = entries[at].parent;
                    }
                    w.reverse();
                    return Ok(Some(w));
                }
                if len + 1 < depth {
                    entries.push(Entry {
                        node: child,
                        state: t.target,
                        parent: head,
                        input: a,
                        len: len + 1,
                    });
                }
            }
            head += 1;
        }
        Ok(None)
    }

    /// Access sequences × all middle words of length ≤ depth + 1 (i.e. the
    /// transition cover followed by up to `depth` extra symbols) × a
    /// characterizing set of the hypothesis.
    fn w_method(&mut self, depth: usize) -> Result<Option<Vec<usize>>, ActiveError> {
        let k = self.k();
        let h = self.hypothesis;
        let from_hyp: Vec<usize> = (0..k)
            .map(|hi| self.to_hyp.iter().position(|&x| x == hi).expect("bijection"))
            .collect();
        let access: Vec<Vec<usize>> = h
            .access_sequences()
            .into_iter()
            .map(|w| w.iter().map(|s| from_hyp[h.input_index(s).expect("own input")]).collect())
            .collect();
        let characterizing = characterizing_set(h)
            .into_iter()
            .map(|w| w.into_iter().map(|hi| from_hyp[hi]).collect::<Vec<_>>())
            .collect::<Vec<_>>();

        let mut middles: Vec<Vec<usize>> = vec![Vec::new()];
        let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..=depth {
            layer = layer
                .iter()
                .flat_map(|w| {
                    (0..k).map(move |a| {
                        let mut next = w.clone();
                        next.push(a);
                        next
                    })
                })
                .collect();
            middles.extend(layer.iter().cloned());
        }

        for prefix in &access {
            for middle in &middles {
                for suffix in &characterizing {
                    let word: Vec<usize> = prefix.iter().chain(middle).chain(suffix).copied().collect();
                    if word.is_empty() {
                        continue;
                    }
                    if let Some(ce) = self.check(&word)? {
                        return Ok(Some(ce));
                    }
                }
            }
        }
        Ok(None)
    }

    fn random_walk(&mut self, count: usize, length: usize, seed: u64) -> Result<Option<Vec<usize>>, ActiveError> {
        let k = self.k();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let word: Vec<usize> = (0..length).map(|_| rng.gen_range(0..k)).collect();
            if let Some(ce) = self.check(&word)? {
                return Ok(Some(ce));
            }
        }
        Ok(None)
    }
}

/// Pairwise shortest distinguishing words of the hypothesis, deduplicated, as
/// hypothesis input indices. A single-state machine gets `{ε}`.
fn characterizing_set(h: &MealyMachine) -> Vec<Vec<usize>> {
    let k = h.inputs().len();
    let inputs: Vec<(usize, usize)> = (0..k).map(|a| (a, a)).collect();
    let mut set: Vec<Vec<usize>> = Vec::new();
    for i in 0..h.state_count() {
        for j in (i + 1)..h.state_count() {
            if let Some(w) = distinguishing_words(h, h, (i, j), &inputs, 1).pop() {
                if !set.contains(&w) {
                    set.push(w);
                }
            }
        }
    }
    if set.is_empty() {
        set.push(Vec::new());
    }
    set
}
