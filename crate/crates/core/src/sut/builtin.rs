//! Three small FTP-like reference servers that disagree on a handful of
//! transitions, used as ground truth for learning and differential testing.

use std::fmt;
use std::str::FromStr;

use crate::automata::{symbols, MealyMachine, Symbol, TransitionSpec};

use super::{SutDescriptor, SutError, SutSession};

pub const INPUTS: [&str; 7] = ["USER", "PASS", "LIST", "RNFR", "RNTO", "QUIT", "MALFORMED"];
pub const OUTPUTS: [&str; 11] = [
    "R220", "R331", "R230", "R150", "R250", "R350", "R503", "R530", "R500", "R221", "R421",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    A,
    B,
    C,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::A, Variant::B, Variant::C];
    pub const NAMES: [&'static str; 3] = ["varA", "varB", "varC"];

    pub fn name(self) -> &'static str {
        match self {
            Variant::A => "varA",
            Variant::B => "varB",
            Variant::C => "varC",
        }
    }

    /// Ground-truth transition table.
    ///
    /// States: 0 start, 1 await-pass, 2 logged-in, 3 rename-pending, 4 closed.
    pub fn model(self) -> MealyMachine {
        const START: usize = 0;
        const AWAIT_PASS: usize = 1;
        const LOGGED_IN: usize = 2;
        const RENAME: usize = 3;
        const CLOSED: usize = 4;

        let next = |state: usize, input: &str| -> (usize, &'static str) {
            match (state, input) {
                (START, "USER") => (AWAIT_PASS, "R331"),
                (START, "QUIT") => (CLOSED, "R221"),
                (START, "MALFORMED") => (START, "R500"),
                (START, _) => (START, "R530"),

                (AWAIT_PASS, "PASS") => (LOGGED_IN, "R230"),
                (AWAIT_PASS, "USER") => (AWAIT_PASS, "R331"),
                (AWAIT_PASS, "QUIT") => (CLOSED, "R221"),
                (AWAIT_PASS, "MALFORMED") if self == Variant::C => (START, "R500"),
                (AWAIT_PASS, "MALFORMED") => (AWAIT_PASS, "R500"),
                (AWAIT_PASS, _) => (AWAIT_PASS, "R530"),

                (LOGGED_IN, "LIST") => (LOGGED_IN, "R150"),
                (LOGGED_IN, "RNFR") => (RENAME, "R350"),
                (LOGGED_IN, "RNTO") => (LOGGED_IN, "R503"),
                (LOGGED_IN, "USER") if self == Variant::B => (LOGGED_IN, "R503"),
                (LOGGED_IN, "USER") => (AWAIT_PASS, "R331"),
                (LOGGED_IN, "PASS") => (LOGGED_IN, "R503"),
                (LOGGED_IN, "QUIT") => (CLOSED, "R221"),
                (LOGGED_IN, "MALFORMED") => (LOGGED_IN, "R500"),

                (RENAME, "RNTO") => (LOGGED_IN, "R250"),
                (RENAME, "RNFR") if self == Variant::B => (LOGGED_IN, "R503"),
                (RENAME, "RNFR") => (RENAME, "R350"),
                (RENAME, "QUIT") => (CLOSED, "R221"),
                (RENAME, "MALFORMED") => (LOGGED_IN, "R500"),
                (RENAME, _) => (LOGGED_IN, "R503"),

                (CLOSED, _) => (CLOSED, "R421"),
                _ => unreachable!("state {state} input {input}"),
            }
        };

        let transitions = (0..5).flat_map(|state| {
            INPUTS.iter().map(move |input| {
                let (to, output) = next(state, input);
                TransitionSpec::new(state, input, to, output).expect("static table")
            })
        });
        MealyMachine::new(symbols(&INPUTS), symbols(&OUTPUTS), 5, START, transitions).expect("static table is valid")
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = SutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| SutError::UnknownVariant {
                name: s.to_string(),
                valid: Variant::NAMES.join(", "),
            })
    }
}

/// An in-process SUT that answers queries from a Mealy machine.
#[derive(Debug, Clone)]
pub struct ModelSut {
    descriptor: SutDescriptor,
    machine: MealyMachine,
    state: usize,
}

impl ModelSut {
    pub fn new(name: impl Into<String>, machine: MealyMachine) -> Self {
        ModelSut {
            descriptor: SutDescriptor {
                name: name.into(),
                inputs: machine.inputs().to_vec(),
            },
            state: machine.initial_state(),
            machine,
        }
    }

    pub fn machine(&self) -> &MealyMachine {
        &self.machine
    }
}

impl SutSession for ModelSut {
    fn descriptor(&self) -> &SutDescriptor {
        &self.descriptor
    }

    fn reset(&mut self) -> Result<(), SutError> {
        self.state = self.machine.initial_state();
        Ok(())
    }

    fn query(&mut self, input: &Symbol) -> Result<Symbol, SutError> {
        let (next, output) = self
            .machine
            .step(self.state, input)
            .map_err(|_| SutError::UnknownSymbol(input.clone()))?;
        self.state = next;
        Ok(output.clone())
    }
}

/// Opens a fresh session on one of the built-in variants (`varA`, `varB`, `varC`).
pub fn open_builtin(name: &str) -> Result<ModelSut, SutError> {
    let variant: Variant = name.parse()?;
    Ok(ModelSut::new(format!("builtin:{}", variant.name()), variant.model()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{check_equivalence, minimize};

    fn run(name: &str, inputs: &[&str]) -> Vec<Symbol> {
        open_builtin(name).unwrap().run_trace(&symbols(inputs)).unwrap()
    }

    #[test]
    fn table_examples() {
        let mut a = open_builtin("varA").unwrap();
        assert_eq!(a.query(&Symbol::new("USER").unwrap()).unwrap(), "R331");
        assert_eq!(run("varB", &["USER", "PASS", "USER"]), symbols(&["R331", "R230", "R503"]));
        assert_eq!(run("varC", &["USER", "MALFORMED", "PASS"]), symbols(&["R331", "R500", "R530"]));
        assert!(run("varA", &[]).is_empty());
        assert_eq!(
            run("varA", &["USER", "PASS", "RNFR", "RNTO"]),
            symbols(&["R331", "R230", "R350", "R250"])
        );
        assert_eq!(run("varA", &["QUIT", "USER"]), symbols(&["R221", "R421"]));
    }

    #[test]
    fn variants_are_minimal_and_pairwise_distinct() {
        let models: Vec<_> = Variant::ALL.iter().map(|v| v.model()).collect();
        for m in &models {
            assert_eq!(m.state_count(), 5);
            assert_eq!(minimize(m).state_count(), 5);
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(!check_equivalence(&models[i], &models[j]).unwrap().is_equivalent());
            }
        }
    }

    #[test]
    fn unknown_variant_lists_valid_names() {
        let err = open_builtin("varZ").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("varZ") && msg.contains("varA, varB, varC"), "{msg}");
    }

    #[test]
    fn query_outside_alphabet_fails() {
        let mut s = open_builtin("varA").unwrap();
        assert!(matches!(
            s.query(&Symbol::new("STOR").unwrap()),
            Err(SutError::UnknownSymbol(_))
        ));
    }
}
