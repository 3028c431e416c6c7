use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::automata::Symbol;
use crate::trace::TraceLog;

use super::PassiveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PtaEdge {
    pub target: usize,
    /// Index into [`PrefixTree::outputs`].
    pub output: usize,
    /// Number of trace steps that traverse this edge.
    pub evidence: u64,
}

/// Tree-shaped transducer containing exactly the prefixes of a trace set.
///
/// Input and output alphabets are sorted by name and nodes are numbered in
/// shortlex order of their access sequences, so the root is node 0 and the
/// numbering does not depend on the order of traces in the log.
#[derive(Debug, Clone)]
pub struct PrefixTree {
    inputs: Vec<Symbol>,
    outputs: Vec<Symbol>,
    /// `(parent, input)` of every non-root node.
    parents: Vec<Option<(usize, usize)>>,
    /// `edges[node * |inputs| + input]`
    edges: Vec<Option<PtaEdge>>,
}

impl PrefixTree {
    pub fn inputs(&self) -> &[Symbol] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Symbol] {
        &self.outputs
    }

    pub fn node_count(&self) -> usize {
        self.parents.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().flatten().count()
    }

    pub fn input_index(&self, input: &Symbol) -> Option<usize> {
        self.inputs.binary_search(input).ok()
    }

    pub fn edge(&self, node: usize, input: usize) -> Option<PtaEdge> {
        self.edges[node * self.inputs.len() + input]
    }

    pub fn edge_by_symbol(&self, node: usize, input: &Symbol) -> Option<PtaEdge> {
        self.edge(node, self.input_index(input)?)
    }

    /// Node reached by an access sequence, if it is in the tree.
    pub fn node_for(&self, word: &[Symbol]) -> Option<usize> {
        word.iter()
            .try_fold(0, |node, input| self.edge_by_symbol(node, input).map(|e| e.target))
    }

    pub fn access_sequence(&self, mut node: usize) -> Vec<Symbol> {
        let mut word = Vec::new();
        while let Some((parent, input)) = self.parents[node] {
            word.push(self.inputs[input].clone());
            node = parent;
        }
        word.reverse();
        word
    }
}

/// Builds the prefix tree of a log. Aborted traces contribute the steps they
/// recorded.
pub fn build_pta(log: &TraceLog) -> Result<PrefixTree, PassiveError> {
    let inputs: Vec<Symbol> = log
        .entries
        .iter()
        .flat_map(|t| t.steps.iter().map(|s| s.input.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let outputs: Vec<Symbol> = log
        .entries
        .iter()
        .flat_map(|t| t.steps.iter().map(|s| s.output.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let input_ids: HashMap<&Symbol, usize> = inputs.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let output_ids: HashMap<&Symbol, usize> = outputs.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let k = inputs.len();

    // Insertion-order tree first, renumbered afterwards.
    let mut raw: Vec<Option<PtaEdge>> = vec![None; k];
    let mut node_count = 1;
    for trace in &log.entries {
        let mut node = 0;
        for (step_index, step) in trace.steps.iter().enumerate() {
            let a = input_ids[&step.input];
            let o = output_ids[&step.output];
            let slot = node * k + a;
            match &mut raw[slot] {
                Some(edge) if edge.output != o => {
                    return Err(PassiveError::Conflict {
                        trace_id: trace.id,
                        step: step_index,
                        input: step.input.clone(),
                        first: outputs[edge.output].clone(),
                        second: step.output.clone(),
                    });
                }
                Some(edge) => {
                    edge.evidence += 1;
                    node = edge.target;
                }
                None => {
                    raw[slot] = Some(PtaEdge {
                        target: node_count,
                        output: o,
                        evidence: 1,
                    });
                    raw.extend(std::iter::repeat(None).take(k));
                    node = node_count;
                    node_count += 1;
                }
            }
        }
    }

    let mut renumber = vec![usize::MAX; node_count];
    let mut parents = Vec::with_capacity(node_count);
    let mut order = Vec::with_capacity(node_count);
    renumber[0] = 0;
    parents.push(None);
    order.push(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(old) = queue.pop_front() {
        for a in 0..k {
            if let Some(edge) = raw[old * k + a] {
                renumber[edge.target] = order.len();
                parents.push(Some((renumber[old], a)));
                order.push(edge.target);
                queue.push_back(edge.target);
            }
        }
    }
    let mut edges = Vec::with_capacity(raw.len());
    for &old in &order {
        for a in 0..k {
            edges.push(raw[old * k + a].map(|e| PtaEdge {
                target: renumber[e.target],
                ..e
            }));
        }
    }
    Ok(PrefixTree {
        inputs,
        outputs,
        parents,
        edges,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::automata::symbols;
    use crate::trace::{zip_steps, LogHeader, TraceSource};

    pub(crate) fn log_of(traces: &[(&[&str], &[&str])]) -> TraceLog {
        let mut log = TraceLog::new(LogHeader::manual("test"));
        for (i, o) in traces {
            log.push(TraceSource::Manual, zip_steps(&symbols(i), &symbols(o)), false);
        }
        log
    }

    #[test]
    fn empty_log_is_a_root() {
        let pta = build_pta(&log_of(&[])).unwrap();
        assert_eq!(pta.node_count(), 1);
        assert_eq!(pta.edge_count(), 0);
    }

    #[test]
    fn shared_prefixes_accumulate_evidence() {
        let pta = build_pta(&log_of(&[(&["USER"], &["R331"]), (&["USER", "PASS"], &["R331", "R230"])])).unwrap();
        assert_eq!(pta.node_count(), 3);
        let edge = pta.edge_by_symbol(0, &Symbol::new("USER").unwrap()).unwrap();
        assert_eq!(edge.evidence, 2);
        assert_eq!(pta.access_sequence(2), symbols(&["USER", "PASS"]));
    }

    #[test]
    fn conflicting_outputs_are_rejected() {
        let err = build_pta(&log_of(&[(&["USER"], &["R331"]), (&["USER"], &["R500"])])).unwrap_err();
        match err {
            PassiveError::Conflict {
                trace_id,
                step,
                first,
                second,
                ..
            } => {
                assert_eq!((trace_id, step), (1, 0));
                assert_eq!((first.as_str(), second.as_str()), ("R331", "R500"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn numbering_is_shortlex() {
        let pta = build_pta(&log_of(&[(&["b", "a"], &["x", "x"]), (&["a"], &["y"]), (&["b"], &["x"])])).unwrap();
        assert_eq!(pta.access_sequence(1), symbols(&["a"]));
        assert_eq!(pta.access_sequence(2), symbols(&["b"]));
        assert_eq!(pta.access_sequence(3), symbols(&["b", "a"]));
    }
}
