//! Deterministic Mealy machines: execution, minimization, equivalence
//! checking and serialization.

mod equivalence;
mod format;
mod machine;
mod minimize;
mod symbol;

use thiserror::Error;

pub use equivalence::{check_equivalence, EquivalenceResult, Verdict};
pub(crate) use equivalence::{alphabet_difference, distinguishing_words};
pub(crate) use format::to_dot_with;
pub use format::{parse, serialize, to_dot, to_json, ModelFormat};
pub use machine::{MealyMachine, Transition, TransitionSpec};
pub use minimize::minimize;
pub use symbol::{parse_symbol_list, symbols, Symbol};

#[derive(Debug, Error)]
pub enum AutomataError {
    #[error("invalid symbol {name:?}: {reason}")]
    InvalidSymbol { name: String, reason: &'static str },
    #[error("symbol {0} listed twice in an alphabet")]
    DuplicateSymbol(Symbol),
    #[error("unknown input symbol {0}")]
    UnknownSymbol(Symbol),
    #[error("output {0} is not in the output alphabet")]
    OutputNotInAlphabet(Symbol),
    #[error("machine must have at least one state")]
    NoStates,
    #[error("state {state} out of range (state_count = {state_count})")]
    StateOutOfRange { state: usize, state_count: usize },
    #[error("incomplete transition map: no transition for (state {state}, input {input})")]
    Incomplete { state: usize, input: Symbol },
    #[error("non-deterministic transition map: (state {state}, input {input}) defined twice")]
    NonDeterministic { state: usize, input: Symbol },
    #[error("input alphabets differ: only in first {only_left:?}, only in second {only_right:?}")]
    AlphabetMismatch {
        only_left: Vec<Symbol>,
        only_right: Vec<Symbol>,
    },
    #[error("model-json schema error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("malformed model: {0}")]
    Schema(String),
}
