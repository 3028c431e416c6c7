use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::automata::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationOp {
    Swap,
    Drop,
    Duplicate,
    Insert,
    Corrupt,
}

impl MutationOp {
    pub const ALL: [MutationOp; 5] = [
        MutationOp::Swap,
        MutationOp::Drop,
        MutationOp::Duplicate,
        MutationOp::Insert,
        MutationOp::Corrupt,
    ];
}

/// Relative operator weights. Zero disables an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationWeights {
    pub swap: u32,
    pub drop: u32,
    pub duplicate: u32,
    pub insert: u32,
    pub corrupt: u32,
}

impl Default for MutationWeights {
    fn default() -> Self {
        MutationWeights {
            swap: 1,
            drop: 1,
            duplicate: 1,
            insert: 1,
            corrupt: 1,
        }
    }
}

impl MutationWeights {
    pub fn weight(&self, op: MutationOp) -> u32 {
        match op {
            MutationOp::Swap => self.swap,
            MutationOp::Drop => self.drop,
            MutationOp::Duplicate => self.duplicate,
            MutationOp::Insert => self.insert,
            MutationOp::Corrupt => self.corrupt,
        }
    }

    pub fn total(&self) -> u64 {
        MutationOp::ALL.iter().map(|&op| u64::from(self.weight(op))).sum()
    }
}

/// What the mutator may draw from.
#[derive(Debug, Clone)]
pub struct MutationContext<'a> {
    pub max_len: usize,
    /// Symbols for `insert`.
    pub alphabet: &'a [Symbol],
    /// Whether `corrupt` may be used at all.
    pub allow_corrupt: bool,
}

impl MutationContext<'_> {
    /// Whether `op` can change a word of length `len`.
    pub fn applicable(&self, op: MutationOp, len: usize) -> bool {
        match op {
            MutationOp::Swap => len >= 2,
            MutationOp::Drop => len >= 1,
            MutationOp::Duplicate => len >= 1 && len < self.max_len,
            MutationOp::Insert => len < self.max_len && !self.alphabet.is_empty(),
            MutationOp::Corrupt => len >= 1 && self.allow_corrupt,
        }
    }
}

/// Applies a single operator at random positions. The caller is responsible
/// for checking [`MutationContext::applicable`]; an inapplicable operator
/// returns the word unchanged.
pub fn apply_mutation<R: Rng + ?Sized>(
    op: MutationOp,
    inputs: &[Symbol],
    rng: &mut R,
    ctx: &MutationContext<'_>,
) -> Vec<Symbol> {
    let mut word = inputs.to_vec();
    if !ctx.applicable(op, word.len()) {
        return word;
    }
    let n = word.len();
    match op {
        MutationOp::Swap => {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            word.swap(i, j);
        }
        MutationOp::Drop => {
            word.remove(rng.gen_range(0..n));
        }
        MutationOp::Duplicate => {
            let i = rng.gen_range(0..n);
            word.insert(i, word[i].clone());
        }
        MutationOp::Insert => {
            let at = rng.gen_range(0..=n);
            let symbol = ctx.alphabet.choose(rng).expect("non-empty alphabet").clone();
            word.insert(at, symbol);
        }
        MutationOp::Corrupt => {
            word[rng.gen_range(0..n)] = Symbol::malformed();
        }
    }
    word
}

/// Applies one weighted-random operator among those applicable to `inputs`.
pub fn mutate_trace<R: Rng + ?Sized>(
    inputs: &[Symbol],
    rng: &mut R,
    weights: &MutationWeights,
    ctx: &MutationContext<'_>,
) -> Vec<Symbol> {
    let usable: Vec<(MutationOp, u32)> = MutationOp::ALL
        .iter()
        .map(|&op| (op, weights.weight(op)))
        .filter(|&(op, w)| w > 0 && ctx.applicable(op, inputs.len()))
        .collect();
    let total: u64 = usable.iter().map(|&(_, w)| u64::from(w)).sum();
    if total == 0 {
        return inputs.to_vec();
    }
    let mut pick = rng.gen_range(0..total);
    for (op, w) in usable {
        if pick < u64::from(w) {
            return apply_mutation(op, inputs, rng, ctx);
        }
        pick -= u64::from(w);
    }
    unreachable!("pick is below the total weight")
}
