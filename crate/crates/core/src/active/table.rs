use std::collections::{HashMap, HashSet};

use crate::automata::{MealyMachine, Symbol, Transition};

use super::{ActiveError, QueryOracle};

pub type Word = Vec<Symbol>;

/// Prefix rows (short rows `S` plus the boundary `S·A`), suffix columns `E`,
/// and for every row/column the last output of querying `prefix·suffix`.
///
/// The first `|A|` columns are always the single-symbol suffixes in alphabet
/// order, so column `a` holds the output of input `a` after the row prefix.
#[derive(Debug, Clone)]
pub struct ObservationTable {
    alphabet: Vec<Symbol>,
    short: Vec<Word>,
    short_set: HashSet<Word>,
    suffixes: Vec<Word>,
    rows: HashMap<Word, Vec<Symbol>>,
}

impl ObservationTable {
    pub fn new(alphabet: &[Symbol]) -> Self {
        let empty: Word = Vec::new();
        ObservationTable {
            alphabet: alphabet.to_vec(),
            short: vec![empty.clone()],
            short_set: HashSet::from([empty]),
            suffixes: alphabet.iter().map(|a| vec![a.clone()]).collect(),
            rows: HashMap::new(),
        }
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn short_rows(&self) -> &[Word] {
        &self.short
    }

    pub fn suffixes(&self) -> &[Word] {
        &self.suffixes
    }

    /// Extensions `s·a` of short rows that are not short rows themselves,
    /// in `(S order, alphabet order)`.
    pub fn boundary_rows(&self) -> Vec<Word> {
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        for s in &self.short {
            for a in &self.alphabet {
                let mut w = s.clone();
                w.push(a.clone());
                if !self.short_set.contains(&w) && seen.insert(w.clone()) {
                    rows.push(w);
                }
            }
        }
        rows
    }

    pub fn contains_short(&self, word: &[Symbol]) -> bool {
        self.short_set.contains(word)
    }

    /// The filled part of a row, in column order.
    pub fn row(&self, prefix: &[Symbol]) -> Option<&[Symbol]> {
        self.rows.get(prefix).map(Vec::as_slice)
    }

    pub fn cell(&self, prefix: &[Symbol], suffix: &[Symbol]) -> Option<&Symbol> {
        let col = self.suffixes.iter().position(|e| e.as_slice() == suffix)?;
        self.rows.get(prefix)?.get(col)
    }

    /// True when every short and boundary row has a value for every column.
    pub fn is_filled(&self) -> bool {
        let n = self.suffixes.len();
        self.short
            .iter()
            .chain(self.boundary_rows().iter())
            .all(|p| self.rows.get(p).is_some_and(|r| r.len() == n))
    }

    /// Queries every missing cell.
    pub fn fill(&mut self, oracle: &mut QueryOracle<'_>) -> Result<(), ActiveError> {
        let prefixes: Vec<Word> = self.short.iter().cloned().chain(self.boundary_rows()).collect();
        for prefix in prefixes {
            let row = self.rows.entry(prefix.clone()).or_default();
            for suffix in &self.suffixes[row.len()..] {
                let mut word = prefix.clone();
                word.extend(suffix.iter().cloned());
                row.push(oracle.last_output(&word)?);
            }
        }
        Ok(())
    }

    /// Adds a short row; returns false if it was already present. The caller
    /// keeps `S` prefix-closed.
    pub fn add_short_row(&mut self, word: Word) -> bool {
        if self.short_set.insert(word.clone()) {
            self.short.push(word);
            true
        } else {
            false
        }
    }

    /// Adds a column; returns false if it was already present.
    pub fn add_suffix(&mut self, suffix: Word) -> bool {
        assert!(!suffix.is_empty(), "suffixes are non-empty");
        if self.suffixes.contains(&suffix) {
            false
        } else {
            self.suffixes.push(suffix);
            true
        }
    }

    fn filled_row(&self, prefix: &[Symbol]) -> &[Symbol] {
        self.row(prefix).expect("table is filled")
    }
}

/// First boundary row whose contents match no short row.
pub fn find_unclosed(table: &ObservationTable) -> Option<Word> {
    let short: HashSet<&[Symbol]> = table.short.iter().map(|s| table.filled_row(s)).collect();
    table
        .boundary_rows()
        .into_iter()
        .find(|b| !short.contains(table.filled_row(b)))
}

/// Looks for two equal short rows whose one-step extensions differ and
/// returns the suffix `a·e` that separates them.
pub fn find_inconsistency(table: &ObservationTable) -> Option<Word> {
    let mut by_row: HashMap<&[Symbol], &Word> = HashMap::new();
    for s2 in &table.short {
        let row = table.filled_row(s2);
        let Some(&s1) = by_row.get(row) else {
            by_row.insert(row, s2);
            continue;
        };
        for a in &table.alphabet {
            let mut w1 = s1.clone();
            w1.push(a.clone());
            let mut w2 = s2.clone();
            w2.push(a.clone());
            let (r1, r2) = (table.filled_row(&w1), table.filled_row(&w2));
            if let Some(col) = (0..r1.len()).find(|&c| r1[c] != r2[c]) {
                let mut suffix = vec![a.clone()];
                suffix.extend(table.suffixes[col].iter().cloned());
                return Some(suffix);
            }
        }
    }
    None
}

/// Builds the hypothesis: one state per distinct short row, initial state is
/// the row of the empty word.
pub fn build_hypothesis(table: &ObservationTable) -> Result<MealyMachine, ActiveError> {
    if !table.is_filled() {
        return Err(ActiveError::NotClosed("table has unfilled cells".into()));
    }
    let mut state_of: HashMap<&[Symbol], usize> = HashMap::new();
    let mut representatives: Vec<&Word> = Vec::new();
    for s in &table.short {
        let row = table.filled_row(s);
        if !state_of.contains_key(row) {
            state_of.insert(row, representatives.len());
            representatives.push(s);
        }
    }

    let mut outputs: Vec<Symbol> = Vec::new();
    let mut output_ids: HashMap<&Symbol, usize> = HashMap::new();
    let mut transitions = Vec::with_capacity(representatives.len() * table.alphabet.len());
    for rep in &representatives {
        let row = table.filled_row(rep);
        for (a, input) in table.alphabet.iter().enumerate() {
            let mut next = (*rep).clone();
            next.push(input.clone());
            let target = *state_of.get(table.filled_row(&next)).ok_or_else(|| {
                ActiveError::NotClosed(format!("row {next:?} matches no short row"))
            })?;
            let out = &row[a];
            let output = *output_ids.entry(out).or_insert_with(|| {
                outputs.push(out.clone());
                outputs.len() - 1
            });
            transitions.push(Transition { target, output });
        }
    }
    Ok(MealyMachine::from_table(table.alphabet.clone(), outputs, 0, transitions)?)
}

/// Adds every prefix of the counterexample to the short rows.
pub fn refine_with_counterexample(table: &mut ObservationTable, counterexample: &[Symbol]) {
    for len in 1..=counterexample.len() {
        table.add_short_row(counterexample[..len].to_vec());
    }
}
