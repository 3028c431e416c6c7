use serde::Serialize;

use crate::automata::{MealyMachine, Symbol, Transition};

use super::{MergeConfig, PassiveError, PrefixTree};

/// Output emitted by the sink that completes unobserved transitions.
pub const UNOBSERVED: &str = "UNOBSERVED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Edge {
    target: usize,
    output: usize,
    evidence: u64,
}

enum Undo {
    Parent(usize),
    Edge { slot: usize, old: Option<Edge> },
}

/// Quotient of a prefix tree under a union-find of merged nodes, with an
/// undo log so candidate merges can be tried and rolled back.
pub struct Merger<'p> {
    pta: &'p PrefixTree,
    parent: Vec<usize>,
    edges: Vec<Option<Edge>>,
    undo: Vec<Undo>,
}

impl<'p> Merger<'p> {
    pub fn new(pta: &'p PrefixTree) -> Self {
        let k = pta.inputs().len();
        let n = pta.node_count();
        let mut edges = Vec::with_capacity(n * k);
        for node in 0..n {
            for a in 0..k {
                edges.push(pta.edge(node, a).map(|e| Edge {
                    target: e.target,
                    output: e.output,
                    evidence: e.evidence,
                }));
            }
        }
        Merger {
            pta,
            parent: (0..n).collect(),
            edges,
            undo: Vec::new(),
        }
    }

    fn k(&self) -> usize {
        self.pta.inputs().len()
    }

    /// Representative of the class containing `node`.
    pub fn find(&self, mut node: usize) -> usize {
        while self.parent[node] != node {
            node = self.parent[node];
        }
        node
    }

    fn set_parent(&mut self, node: usize, to: usize) {
        self.undo.push(Undo::Parent(node));
        self.parent[node] = to;
    }

    fn set_edge(&mut self, slot: usize, edge: Edge) {
        self.undo.push(Undo::Edge {
            slot,
            old: self.edges[slot],
        });
        self.edges[slot] = Some(edge);
    }

    fn rollback(&mut self, mark: usize) {
        while self.undo.len() > mark {
            match self.undo.pop().expect("non-empty") {
                Undo::Parent(node) => self.parent[node] = node,
                Undo::Edge { slot, old } => self.edges[slot] = old,
            }
        }
    }

    /// Folds the class of `blue` into the class of `red`, merging successors
    /// until the quotient is deterministic again. Returns the summed evidence
    /// of blue-side edges that landed on existing edges, or `None` (with the
    /// state untouched) on an output conflict.
    fn fold(&mut self, red: usize, blue: usize) -> Option<u64> {
        let k = self.k();
        let mark = self.undo.len();
        let mut score = 0u64;
        let mut pending = vec![(red, blue)];
        while let Some((r, b)) = pending.pop() {
            let (r, b) = (self.find(r), self.find(b));
            if r == b {
                continue;
            }
            self.set_parent(b, r);
            for a in 0..k {
                let Some(eb) = self.edges[b * k + a] else { continue };
                let slot = r * k + a;
                match self.edges[slot] {
                    Some(er) if er.output != eb.output => {
                        self.rollback(mark);
                        return None;
                    }
                    Some(er) => {
                        score += eb.evidence;
                        self.set_edge(
                            slot,
                            Edge {
                                evidence: er.evidence + eb.evidence,
                                ..er
                            },
                        );
                        pending.push((er.target, eb.target));
                    }
                    None => self.set_edge(slot, eb),
                }
            }
        }
        Some(score)
    }

    /// Score of merging `blue` into `red` without committing it.
    pub fn check_merge(&mut self, red: usize, blue: usize) -> Option<u64> {
        let mark = self.undo.len();
        let score = self.fold(red, blue);
        self.rollback(mark);
        score
    }

    /// Commits a merge; returns its score, or `None` if incompatible.
    pub fn merge(&mut self, red: usize, blue: usize) -> Option<u64> {
        let score = self.fold(red, blue);
        self.undo.clear();
        score
    }

    /// Successor class of `node`'s class on input `a`.
    fn successor(&self, node: usize, a: usize) -> Option<(usize, usize)> {
        self.edges[self.find(node) * self.k() + a].map(|e| (self.find(e.target), e.output))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeAction {
    Merged,
    Promoted,
}

/// One line of the merge log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeRecord {
    pub step: usize,
    pub action: MergeAction,
    pub blue: Vec<Symbol>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub red: Option<Vec<Symbol>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct PassiveResult {
    pub model: MealyMachine,
    pub pta_nodes: usize,
    pub merges: Vec<MergeRecord>,
}

impl PassiveResult {
    pub fn merge_log_jsonl(&self) -> String {
        self.merges
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// Red-blue state merging over a prefix tree.
pub fn merge_states(pta: &PrefixTree, cfg: &MergeConfig) -> Result<PassiveResult, PassiveError> {
    let k = pta.inputs().len();
    let mut merger = Merger::new(pta);
    let mut red: Vec<usize> = vec![0];
    let mut is_red = vec![false; pta.node_count()];
    is_red[0] = true;
    let mut merges = Vec::new();

    loop {
        // Blue fringe: successors of red states that are not red. PTA node
        // ids are shortlex-ordered, so the smallest id comes first.
        let blue = red
            .iter()
            .flat_map(|&r| (0..k).filter_map(move |a| Some((r, a))))
            .filter_map(|(r, a)| merger.successor(r, a).map(|(t, _)| t))
            .filter(|&t| !is_red[t])
            .min();
        let Some(blue) = blue else { break };

        let mut best: Option<(usize, u64)> = None;
        for &r in &red {
            if let Some(score) = merger.check_merge(r, blue) {
                if score >= cfg.min_evidence && best.is_none_or(|(_, s)| score > s) {
                    best = Some((r, score));
                }
            }
        }
        let record = match best {
            Some((r, score)) => {
                merger.merge(r, blue).expect("checked merge succeeds");
                MergeRecord {
                    step: merges.len(),
                    action: MergeAction::Merged,
                    blue: pta.access_sequence(blue),
                    red: Some(pta.access_sequence(r)),
                    score: Some(score),
                }
            }
            None => {
                red.push(blue);
                is_red[blue] = true;
                MergeRecord {
                    step: merges.len(),
                    action: MergeAction::Promoted,
                    blue: pta.access_sequence(blue),
                    red: None,
                    score: None,
                }
            }
        };
        merges.push(record);
    }

    let model = quotient_machine(pta, &merger, &red)?;
    Ok(PassiveResult {
        model,
        pta_nodes: pta.node_count(),
        merges,
    })
}

/// Turns the red states into a complete machine, sending unobserved
/// transitions to a sink that answers [`UNOBSERVED`].
fn quotient_machine(pta: &PrefixTree, merger: &Merger<'_>, red: &[usize]) -> Result<MealyMachine, PassiveError> {
    let k = pta.inputs().len();
    let mut outputs = pta.outputs().to_vec();
    let index_of = |node: usize| red.iter().position(|&r| r == node).expect("successors of red states are red");
    let sink = red.len();
    let mut needs_sink = false;
    let mut table = Vec::with_capacity((red.len() + 1) * k);
    for &r in red {
        for a in 0..k {
            match merger.successor(r, a) {
                Some((target, output)) => table.push(Transition {
                    target: index_of(target),
                    output,
                }),
                None => {
                    needs_sink = true;
                    table.push(Transition {
                        target: sink,
                        output: outputs.len(),
                    });
                }
            }
        }
    }
    if needs_sink {
        let unobserved = outputs.len();
        outputs.push(Symbol::new(UNOBSERVED).expect("static symbol"));
        table.extend((0..k).map(|_| Transition {
            target: sink,
            output: unobserved,
        }));
    }
    Ok(MealyMachine::from_table(pta.inputs().to_vec(), outputs, 0, table)?)
}
