//! Traces (input/output step sequences) and the JSON-lines trace log that
//! connects the fuzzer, the passive learner and coverage analysis.
//!
//! Log layout: a header line `{campaign, sut, seed, cfg}` followed by one
//! line per trace `{id, source, steps: [{in, out}], aborted}`.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::Symbol;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    #[serde(rename = "in")]
    pub input: Symbol,
    #[serde(rename = "out")]
    pub output: Symbol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceSource {
    Fuzz,
    Manual,
    Guided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub id: u64,
    pub source: TraceSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub steps: Vec<TraceStep>,
    /// The SUT failed mid-trace; `steps` holds what was observed before that.
    #[serde(default)]
    pub aborted: bool,
}

impl Trace {
    pub fn inputs(&self) -> Vec<Symbol> {
        self.steps.iter().map(|s| s.input.clone()).collect()
    }

    pub fn outputs(&self) -> Vec<Symbol> {
        self.steps.iter().map(|s| s.output.clone()).collect()
    }
}

/// Zips an input word and the matching output word into steps.
pub fn zip_steps(inputs: &[Symbol], outputs: &[Symbol]) -> Vec<TraceStep> {
    inputs
        .iter()
        .zip(outputs)
        .map(|(i, o)| TraceStep {
            input: i.clone(),
            output: o.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub campaign: String,
    pub sut: String,
    pub seed: u64,
    #[serde(default)]
    pub cfg: serde_json::Value,
}

impl LogHeader {
    pub fn manual(sut: &str) -> Self {
        LogHeader {
            campaign: "manual".to_string(),
            sut: sut.to_string(),
            seed: 0,
            cfg: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceLogError {
    #[error("trace log line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("trace log line {line}: duplicate trace id {id}")]
    DuplicateId { line: usize, id: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog {
    pub header: LogHeader,
    pub entries: Vec<Trace>,
}

impl TraceLog {
    pub fn new(header: LogHeader) -> Self {
        TraceLog {
            header,
            entries: Vec::new(),
        }
    }

    /// Appends a trace with the next free id and returns that id.
    pub fn push(&mut self, source: TraceSource, steps: Vec<TraceStep>, aborted: bool) -> u64 {
        let id = self.entries.last().map_or(0, |t| t.id + 1);
        self.entries.push(Trace {
            id,
            source,
            seed: None,
            steps,
            aborted,
        });
        id
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn total_steps(&self) -> usize {
        self.entries.iter().map(|t| t.steps.len()).sum()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for trace in &self.entries {
            let _ = writeln!(out, "{}", serde_json::to_string(trace).expect("trace serializes"));
        }
        out
    }

    /// Parses a log. A completely empty document is an empty manual log.
    pub fn from_jsonl(text: &str) -> Result<Self, TraceLogError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        let header = match lines.next() {
            None => return Ok(TraceLog::new(LogHeader::manual("unknown"))),
            Some((line, raw)) => serde_json::from_str::<LogHeader>(raw).map_err(|e| TraceLogError::Json {
                line,
                message: format!("bad header: {e}"),
            })?,
        };
        let mut log = TraceLog::new(header);
        let mut seen = HashSet::new();
        for (line, raw) in lines {
            let trace: Trace = serde_json::from_str(raw).map_err(|e| TraceLogError::Json {
                line,
                message: e.to_string(),
            })?;
            if !seen.insert(trace.id) {
                return Err(TraceLogError::DuplicateId { line, id: trace.id });
            }
            log.entries.push(trace);
        }
        Ok(log)
    }
}
