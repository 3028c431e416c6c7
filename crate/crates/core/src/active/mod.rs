//! Active learning of Mealy models with an observation table, output queries
//! and a conformance-testing equivalence oracle.

mod counterexample;
mod oracle;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{AutomataError, MealyMachine, Symbol};
use crate::sut::{SutError, SutSession};

pub use counterexample::find_counterexample;
pub use oracle::{QueryOracle, QueryStats};
pub use table::{
    build_hypothesis, find_inconsistency, find_unclosed, refine_with_counterexample, ObservationTable, Word,
};

/// Upper bound on the number of test words a single equivalence check may
/// generate (exhaustive: `|A|^depth`; w-method: full suite size).
pub const QUERY_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ActiveError {
    #[error(transparent)]
    Sut(#[from] SutError),
    #[error("non-deterministic SUT: {word:?} answered {first:?} and later {second:?}")]
    Nondeterministic {
        word: Vec<Symbol>,
        first: Vec<Symbol>,
        second: Vec<Symbol>,
    },
    #[error("observation table not closed: {0}")]
    NotClosed(String),
    #[error("learning alphabet is empty")]
    EmptyAlphabet,
    #[error("exhaustive search over {alphabet} symbols to depth {depth} exceeds {limit} queries")]
    Budget { alphabet: usize, depth: usize, limit: u64 },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceMode {
    RandomWalk,
    WMethod,
    Exhaustive,
}

impl std::str::FromStr for EquivalenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random-walk" => Ok(EquivalenceMode::RandomWalk),
            "w-method" => Ok(EquivalenceMode::WMethod),
            "exhaustive" => Ok(EquivalenceMode::Exhaustive),
            other => Err(format!("unknown equivalence mode {other:?} (random-walk, w-method, exhaustive)")),
        }
    }
}

/// How hard to look for counterexamples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceConfig {
    pub mode: EquivalenceMode,
    /// Extra depth for the w-method, maximal word length for exhaustive search.
    pub depth_bound: usize,
    pub walk_count: usize,
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        EquivalenceConfig {
            mode: EquivalenceMode::WMethod,
            depth_bound: 2,
            walk_count: 1000,
            walk_length: 20,
            seed: 0,
        }
    }
}

impl EquivalenceConfig {
    pub fn validate(&self) -> Result<(), ActiveError> {
        if self.walk_count == 0 || self.walk_length == 0 {
            return Err(ActiveError::Config("walk_count and walk_length must be positive".into()));
        }
        Ok(())
    }
}

/// One learning round, as written to the learning log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub short_rows: usize,
    pub boundary_rows: usize,
    pub suffixes: usize,
    pub hypothesis_states: usize,
    pub counterexample: Option<Vec<Symbol>>,
    pub resets: u64,
    pub symbols: u64,
}

#[derive(Debug, Clone)]
pub struct LearnResult {
    pub model: MealyMachine,
    pub stats: QueryStats,
    pub rounds: Vec<RoundRecord>,
}

impl LearnResult {
    /// The learning log as JSON lines, one record per round.
    pub fn log_jsonl(&self) -> String {
        self.rounds
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// Table-based learner state. [`learn_active`] drives the full loop; the
/// individual steps are exposed for inspection.
pub struct Learner<'a> {
    oracle: QueryOracle<'a>,
    table: ObservationTable,
}

impl<'a> Learner<'a> {
    pub fn new(sut: &'a mut dyn SutSession, alphabet: &[Symbol]) -> Result<Self, ActiveError> {
        let oracle = QueryOracle::new(sut, alphabet)?;
        Ok(Learner {
            table: ObservationTable::new(alphabet),
            oracle,
        })
    }

    pub fn table(&self) -> &ObservationTable {
        &self.table
    }

    pub fn oracle(&mut self) -> &mut QueryOracle<'a> {
        &mut self.oracle
    }

    /// Fills the table and repairs it until it is closed and consistent.
    pub fn stabilize(&mut self) -> Result<(), ActiveError> {
        loop {
            self.table.fill(&mut self.oracle)?;
            if let Some(row) = find_unclosed(&self.table) {
                self.table.add_short_row(row);
                continue;
            }
            if let Some(suffix) = find_inconsistency(&self.table) {
                self.table.add_suffix(suffix);
                continue;
            }
            return Ok(());
        }
    }

    pub fn hypothesis(&self) -> Result<MealyMachine, ActiveError> {
        build_hypothesis(&self.table)
    }

    pub fn find_counterexample(
        &mut self,
        hypothesis: &MealyMachine,
        eq: &EquivalenceConfig,
    ) -> Result<Option<Vec<Symbol>>, ActiveError> {
        find_counterexample(&mut self.oracle, hypothesis, eq)
    }

    pub fn refine(&mut self, counterexample: &[Symbol]) {
        refine_with_counterexample(&mut self.table, counterexample);
    }
}

/// Learns a Mealy model of `sut` over `alphabet`.
///
/// Loops fill → close → hypothesis → counterexample search → refine until
/// the equivalence oracle finds no disagreement.
pub fn learn_active(
    sut: &mut dyn SutSession,
    alphabet: &[Symbol],
    eq: &EquivalenceConfig,
) -> Result<LearnResult, ActiveError> {
    eq.validate()?;
    let mut learner = Learner::new(sut, alphabet)?;
    let mut rounds = Vec::new();
    let mut previous: Option<(usize, Vec<Symbol>)> = None;
    loop {
        learner.stabilize()?;
        let hypothesis = learner.hypothesis()?;
        if let Some((states, ce)) = previous.take() {
            // A counterexample that still disagrees with no new state means
            // the table failed to make progress.
            if hypothesis.state_count() <= states && hypothesis.run(&ce)? != learner.oracle.query(&ce)? {
                return Err(ActiveError::NotClosed(format!("no progress on counterexample {ce:?}")));
            }
        }
        let counterexample = learner.find_counterexample(&hypothesis, eq)?;
        let stats = learner.oracle.stats();
        rounds.push(RoundRecord {
            round: rounds.len() + 1,
            short_rows: learner.table.short_rows().len(),
            boundary_rows: learner.table.boundary_rows().len(),
            suffixes: learner.table.suffixes().len(),
            hypothesis_states: hypothesis.state_count(),
            counterexample: counterexample.clone(),
            resets: stats.resets,
            symbols: stats.symbols,
        });
        log::debug!("round {}: {} states, counterexample {:?}", rounds.len(), hypothesis.state_count(), counterexample);
        match counterexample {
            None => {
                return Ok(LearnResult {
                    model: hypothesis,
                    stats,
                    rounds,
                })
            }
            Some(ce) => {
                learner.refine(&ce);
                previous = Some((hypothesis.state_count(), ce));
            }
        }
    }
}
