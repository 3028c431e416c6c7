//! Passive learning: prefix tree construction from recorded traces and
//! red-blue state merging, without any interaction with the SUT.

mod merge;
mod pta;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{AutomataError, Symbol};
use crate::trace::TraceLog;

pub use merge::{merge_states, MergeAction, MergeRecord, Merger, PassiveResult, UNOBSERVED};
pub use pta::{build_pta, PrefixTree, PtaEdge};

#[derive(Debug, Error)]
pub enum PassiveError {
    #[error("conflicting observations: trace {trace_id} step {step} input {input} answered {second}, earlier traces answered {first}")]
    Conflict {
        trace_id: u64,
        step: usize,
        input: Symbol,
        first: Symbol,
        second: Symbol,
    },
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

/// Merge acceptance settings. Blue states are always considered in
/// shortlex order of their access sequences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeConfig {
    /// Minimum overlap evidence for a merge to be accepted.
    pub min_evidence: u64,
}

/// Learns a Mealy machine from a trace log by red-blue merging.
pub fn learn_passive(traces: &TraceLog, cfg: &MergeConfig) -> Result<PassiveResult, PassiveError> {
    let pta = build_pta(traces)?;
    merge_states(&pta, cfg)
}
