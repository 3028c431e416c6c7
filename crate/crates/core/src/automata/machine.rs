use std::collections::{HashMap, VecDeque};

use super::{AutomataError, Symbol};

/// One entry of a transition table: where an input leads and what it emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub target: usize,
    /// Index into the machine's output alphabet.
    pub output: usize,
}

/// A transition given by symbol names, as found in serialized models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSpec {
    pub from: usize,
    pub input: Symbol,
    pub to: usize,
    pub output: Symbol,
}

impl TransitionSpec {
    pub fn new(from: usize, input: &str, to: usize, output: &str) -> Result<Self, AutomataError> {
        Ok(TransitionSpec {
            from,
            input: Symbol::new(input)?,
            to,
            output: Symbol::new(output)?,
        })
    }
}

/// A deterministic, complete Mealy machine.
///
/// Machines are immutable values. Construction validates the transition map,
/// drops states that cannot be reached from the initial state and renumbers
/// the remaining ones in breadth-first order (inputs explored in alphabet
/// order), so the initial state is always `0` and two machines built from
/// isomorphic reachable parts compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyMachine {
    inputs: Vec<Symbol>,
    outputs: Vec<Symbol>,
    input_index: HashMap<Symbol, usize>,
    output_index: HashMap<Symbol, usize>,
    state_count: usize,
    /// Row-major: `table[state * inputs.len() + input]`.
    table: Vec<Transition>,
}

fn index_alphabet(alphabet: &[Symbol]) -> Result<HashMap<Symbol, usize>, AutomataError> {
    let mut index = HashMap::with_capacity(alphabet.len());
    for (i, sym) in alphabet.iter().enumerate() {
        if index.insert(sym.clone(), i).is_some() {
            return Err(AutomataError::DuplicateSymbol(sym.clone()));
        }
    }
    Ok(index)
}

impl MealyMachine {
    /// Builds a machine from named transitions.
    ///
    /// Every `(state, input)` pair must appear exactly once.
    pub fn new(
        inputs: Vec<Symbol>,
        outputs: Vec<Symbol>,
        state_count: usize,
        initial_state: usize,
        transitions: impl IntoIterator<Item = TransitionSpec>,
    ) -> Result<Self, AutomataError> {
        let input_index = index_alphabet(&inputs)?;
        let output_index = index_alphabet(&outputs)?;
        if state_count == 0 {
            return Err(AutomataError::NoStates);
        }
        if initial_state >= state_count {
            return Err(AutomataError::StateOutOfRange {
                state: initial_state,
                state_count,
            });
        }
        let k = inputs.len();
        let mut table: Vec<Option<Transition>> = vec![None; state_count * k];
        for t in transitions {
            for state in [t.from, t.to] {
                if state >= state_count {
                    return Err(AutomataError::StateOutOfRange { state, state_count });
                }
            }
            let input = *input_index
                .get(&t.input)
                .ok_or_else(|| AutomataError::UnknownSymbol(t.input.clone()))?;
            let output = *output_index
                .get(&t.output)
                .ok_or_else(|| AutomataError::OutputNotInAlphabet(t.output.clone()))?;
            let slot = &mut table[t.from * k + input];
            if slot.is_some() {
                return Err(AutomataError::NonDeterministic {
                    state: t.from,
                    input: t.input,
                });
            }
            *slot = Some(Transition {
                target: t.to,
                output,
            });
        }
        let mut complete = Vec::with_capacity(table.len());
        for (i, entry) in table.into_iter().enumerate() {
            match entry {
                Some(t) => complete.push(t),
                None => {
                    return Err(AutomataError::Incomplete {
                        state: i / k,
                        input: inputs[i % k].clone(),
                    })
                }
            }
        }
        Ok(Self::canonical(inputs, outputs, input_index, output_index, initial_state, state_count, complete))
    }

    /// Builds a machine from an index-based table (`table[state * |inputs| + input]`).
    pub fn from_table(
        inputs: Vec<Symbol>,
        outputs: Vec<Symbol>,
        initial_state: usize,
        table: Vec<Transition>,
    ) -> Result<Self, AutomataError> {
        let input_index = index_alphabet(&inputs)?;
        let output_index = index_alphabet(&outputs)?;
        let k = inputs.len();
        let state_count = if k == 0 {
            if !table.is_empty() {
                return Err(AutomataError::Schema("transitions given for an empty input alphabet".into()));
            }
            initial_state + 1
        } else {
            if table.is_empty() || table.len() % k != 0 {
                return Err(AutomataError::Schema(format!(
                    "table length {} is not a positive multiple of the alphabet size {k}",
                    table.len()
                )));
            }
            table.len() / k
        };
        if initial_state >= state_count {
            return Err(AutomataError::StateOutOfRange {
                state: initial_state,
                state_count,
            });
        }
        for t in &table {
            if t.target >= state_count {
                return Err(AutomataError::StateOutOfRange {
                    state: t.target,
                    state_count,
                });
            }
            if t.output >= outputs.len() {
                return Err(AutomataError::Schema(format!("output index {} out of range", t.output)));
            }
        }
        Ok(Self::canonical(inputs, outputs, input_index, output_index, initial_state, state_count, table))
    }

    /// Prunes unreachable states and renumbers the rest in BFS order.
    fn canonical(
        inputs: Vec<Symbol>,
        outputs: Vec<Symbol>,
        input_index: HashMap<Symbol, usize>,
        output_index: HashMap<Symbol, usize>,
        initial_state: usize,
        state_count: usize,
        table: Vec<Transition>,
    ) -> Self {
        let k = inputs.len();
        let mut renumber = vec![usize::MAX; state_count];
        let mut order = Vec::with_capacity(state_count);
        let mut queue = VecDeque::from([initial_state]);
        renumber[initial_state] = 0;
        order.push(initial_state);
        while let Some(state) = queue.pop_front() {
            for a in 0..k {
                let next = table[state * k + a].target;
                if renumber[next] == usize::MAX {
                    renumber[next] = order.len();
                    order.push(next);
                    queue.push_back(next);
                }
            }
        }
        let mut canonical = Vec::with_capacity(order.len() * k);
        for &old in &order {
            for a in 0..k {
                let t = table[old * k + a];
                canonical.push(Transition {
                    target: renumber[t.target],
                    output: t.output,
                });
            }
        }
        MealyMachine {
            inputs,
            outputs,
            input_index,
            output_index,
            state_count: order.len(),
            table: canonical,
        }
    }

    pub fn inputs(&self) -> &[Symbol] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Symbol] {
        &self.outputs
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    /// Always `0`: construction renumbers states from the initial one.
    pub fn initial_state(&self) -> usize {
        0
    }

    pub fn transition_count(&self) -> usize {
        self.table.len()
    }

    pub fn input_index(&self, input: &Symbol) -> Option<usize> {
        self.input_index.get(input).copied()
    }

    pub fn output_index(&self, output: &Symbol) -> Option<usize> {
        self.output_index.get(output).copied()
    }

    pub fn transition(&self, state: usize, input: usize) -> Transition {
        self.table[state * self.inputs.len() + input]
    }

    /// Follows one transition by input name, returning the next state and output.
    pub fn step(&self, state: usize, input: &Symbol) -> Result<(usize, &Symbol), AutomataError> {
        let a = self
            .input_index(input)
            .ok_or_else(|| AutomataError::UnknownSymbol(input.clone()))?;
        let t = self.transition(state, a);
        Ok((t.target, &self.outputs[t.output]))
    }

    /// Runs an input word from the initial state and returns the output word.
    pub fn run(&self, inputs: &[Symbol]) -> Result<Vec<Symbol>, AutomataError> {
        let mut state = self.initial_state();
        let mut out = Vec::with_capacity(inputs.len());
        for input in inputs {
            let (next, output) = self.step(state, input)?;
            out.push(output.clone());
            state = next;
        }
        Ok(out)
    }

    /// Index-level variant of [`run`](Self::run), returning output indices.
    pub fn run_indices(&self, inputs: &[usize]) -> Vec<usize> {
        let mut state = self.initial_state();
        inputs
            .iter()
            .map(|&a| {
                let t = self.transition(state, a);
                state = t.target;
                t.output
            })
            .collect()
    }

    /// State reached after reading `inputs` from the initial state.
    pub fn state_after(&self, inputs: &[Symbol]) -> Result<usize, AutomataError> {
        let mut state = self.initial_state();
        for input in inputs {
            state = self.step(state, input)?.0;
        }
        Ok(state)
    }

    /// All transitions in `(from, input alphabet order)` order.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &Symbol, usize, &Symbol)> + '_ {
        let k = self.inputs.len();
        self.table.iter().enumerate().map(move |(i, t)| {
            (i / k, &self.inputs[i % k], t.target, &self.outputs[t.output])
        })
    }

    /// Shortest access sequence of every state, indexed by state.
    ///
    /// Ties are broken by input alphabet order, which coincides with the
    /// canonical BFS numbering.
    pub fn access_sequences(&self) -> Vec<Vec<Symbol>> {
        let k = self.inputs.len();
        let mut access: Vec<Option<Vec<Symbol>>> = vec![None; self.state_count];
        access[0] = Some(Vec::new());
        let mut queue = VecDeque::from([0usize]);
        while let Some(state) = queue.pop_front() {
            let prefix = access[state].clone().unwrap_or_default();
            for a in 0..k {
                let next = self.transition(state, a).target;
                if access[next].is_none() {
                    let mut word = prefix.clone();
                    word.push(self.inputs[a].clone());
                    access[next] = Some(word);
                    queue.push_back(next);
                }
            }
        }
        access.into_iter().map(Option::unwrap_or_default).collect()
    }

    /// Projects the machine onto a subset of its inputs (in the given order).
    ///
    /// States only reachable through dropped inputs disappear.
    pub fn restrict_inputs(&self, keep: &[Symbol]) -> Result<MealyMachine, AutomataError> {
        let indices = keep
            .iter()
            .map(|s| self.input_index(s).ok_or_else(|| AutomataError::UnknownSymbol(s.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut table = Vec::with_capacity(self.state_count * indices.len());
        for state in 0..self.state_count {
            for &a in &indices {
                table.push(self.transition(state, a));
            }
        }
        if indices.is_empty() {
            return MealyMachine::from_table(Vec::new(), self.outputs.clone(), 0, Vec::new());
        }
        MealyMachine::from_table(keep.to_vec(), self.outputs.clone(), 0, table)
    }
}
