//! Black-box stateful fuzzing: seed traces are mutated at the message-order
//! level (and optionally corrupted to `MALFORMED`), replayed against a SUT
//! with a reset before each trace, and recorded to a trace log.

mod mutate;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{MealyMachine, Symbol};
use crate::sut::{SutError, SutSession};
use crate::trace::{zip_steps, LogHeader, TraceLog, TraceSource, TraceStep};

pub use mutate::{apply_mutation, mutate_trace, MutationContext, MutationOp, MutationWeights};

#[derive(Debug, Error)]
pub enum FuzzError {
    #[error("invalid fuzz configuration: {0}")]
    Config(String),
    #[error("seed trace {index}: {reason}")]
    Seed { index: usize, reason: String },
    #[error(transparent)]
    Sut(#[from] SutError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzConfig {
    pub seed: u64,
    /// Number of mutated executions. Seeds are additionally run once each,
    /// unmutated, before the first iteration.
    pub iterations: usize,
    pub max_trace_len: usize,
    #[serde(default)]
    pub weights: MutationWeights,
    /// Per-step probability of replacing the input with `MALFORMED`. Zero
    /// also disables the `corrupt` operator.
    #[serde(default)]
    pub malformed_ratio: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 0,
            iterations: 1000,
            max_trace_len: 12,
            weights: MutationWeights::default(),
            malformed_ratio: 0.0,
        }
    }
}

impl FuzzConfig {
    pub fn validate(&self) -> Result<(), FuzzError> {
        if self.iterations == 0 {
            return Err(FuzzError::Config("iterations must be positive".into()));
        }
        if self.max_trace_len == 0 {
            return Err(FuzzError::Config("max_trace_len must be positive".into()));
        }
        if self.weights.total() == 0 {
            return Err(FuzzError::Config("mutation weights are all zero".into()));
        }
        if !(0.0..=1.0).contains(&self.malformed_ratio) {
            return Err(FuzzError::Config(format!(
                "malformed_ratio {} is outside [0, 1]",
                self.malformed_ratio
            )));
        }
        Ok(())
    }
}

/// Shortest access sequence of every state, in state order. Executed
/// unmutated these visit every state of `model`.
pub fn model_guided_traces(model: &MealyMachine) -> Vec<Vec<Symbol>> {
    model.access_sequences()
}

struct Recorded {
    source: TraceSource,
    steps: Vec<TraceStep>,
    aborted: bool,
}

/// Runs one trace. Transport failures become aborted entries holding the
/// steps observed before the failure.
fn execute(sut: &mut dyn SutSession, inputs: &[Symbol], source: TraceSource) -> Result<Recorded, FuzzError> {
    match sut.run_trace(inputs) {
        Ok(outputs) => Ok(Recorded {
            source,
            steps: zip_steps(inputs, &outputs),
            aborted: false,
        }),
        Err(SutError::TraceAborted { partial, reason }) => {
            log::warn!("trace {inputs:?} aborted: {reason}");
            Ok(Recorded {
                source,
                steps: zip_steps(inputs, &partial),
                aborted: true,
            })
        }
        Err(e) => Err(e.into()),
    }
}

struct Worker<'a> {
    cfg: &'a FuzzConfig,
    rng: ChaCha8Rng,
    insert_alphabet: Vec<Symbol>,
    allow_corrupt: bool,
    queue: Vec<Vec<Symbol>>,
    /// Every output-sequence prefix observed so far (prefix-closed).
    seen: HashSet<Vec<Symbol>>,
}

impl<'a> Worker<'a> {
    fn new(cfg: &'a FuzzConfig, sut_inputs: &[Symbol], seeds: &[Vec<Symbol>], stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        let allow_corrupt = cfg.malformed_ratio > 0.0 && sut_inputs.iter().any(Symbol::is_malformed);
        Worker {
            cfg,
            rng,
            insert_alphabet: sut_inputs.iter().filter(|s| !s.is_malformed()).cloned().collect(),
            allow_corrupt,
            queue: seeds.to_vec(),
            seen: HashSet::new(),
        }
    }

    /// Records the output prefixes of a trace; returns true if any was new.
    fn observe(&mut self, steps: &[TraceStep]) -> bool {
        let mut novel = false;
        let mut prefix = Vec::with_capacity(steps.len());
        for step in steps {
            prefix.push(step.output.clone());
            if !self.seen.contains(&prefix) {
                self.seen.insert(prefix.clone());
                novel = true;
            }
        }
        novel
    }

    fn next_input(&mut self) -> Vec<Symbol> {
        let parent = &self.queue[self.rng.gen_range(0..self.queue.len())];
        let ctx = MutationContext {
            max_len: self.cfg.max_trace_len,
            alphabet: &self.insert_alphabet,
            allow_corrupt: self.allow_corrupt,
        };
        let mut word = mutate_trace(parent, &mut self.rng, &self.cfg.weights, &ctx);
        if self.allow_corrupt {
            for symbol in &mut word {
                if self.rng.gen_bool(self.cfg.malformed_ratio) {
                    *symbol = Symbol::malformed();
                }
            }
        }
        word
    }

    fn run(
        &mut self,
        sut: &mut dyn SutSession,
        seed_source: Option<TraceSource>,
        iterations: usize,
    ) -> Result<Vec<Recorded>, FuzzError> {
        let mut out = Vec::with_capacity(iterations + self.queue.len());
        if let Some(source) = seed_source {
            for seed in self.queue.clone() {
                let rec = execute(sut, &seed, source)?;
                self.observe(&rec.steps);
                out.push(rec);
            }
        }
        for _ in 0..iterations {
            let word = self.next_input();
            let rec = execute(sut, &word, TraceSource::Fuzz)?;
            if self.observe(&rec.steps) {
                let kept = rec.steps.iter().map(|s| s.input.clone()).collect();
                self.queue.push(kept);
            }
            out.push(rec);
        }
        Ok(out)
    }
}

fn prepare_seeds(sut_inputs: &[Symbol], seeds: &[Vec<Symbol>], cfg: &FuzzConfig) -> Result<Vec<Vec<Symbol>>, FuzzError> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Ok(vec![Vec::new()]);
    }
    seeds
        .iter()
        .enumerate()
        .map(|(index, seed)| {
            if seed.len() > cfg.max_trace_len {
                return Err(FuzzError::Seed {
                    index,
                    reason: format!("length {} exceeds max_trace_len {}", seed.len(), cfg.max_trace_len),
                });
            }
            match seed.iter().find(|s| !sut_inputs.contains(s)) {
                Some(s) => Err(FuzzError::Seed {
                    index,
                    reason: format!("input {s} is not accepted by the SUT"),
                }),
                None => Ok(seed.clone()),
            }
        })
        .collect()
}

fn assemble(
    sut_name: &str,
    cfg: &FuzzConfig,
    guided: bool,
    jobs: usize,
    shards: Vec<Vec<Recorded>>,
) -> TraceLog {
    let mut cfg_value = serde_json::to_value(cfg).expect("config serializes");
    cfg_value["jobs"] = jobs.into();
    cfg_value["guided"] = guided.into();
    let campaign = format!("{}-{:016x}", if guided { "guided" } else { "fuzz" }, cfg.seed);
    let mut log = TraceLog::new(LogHeader {
        campaign,
        sut: sut_name.to_string(),
        seed: cfg.seed,
        cfg: cfg_value,
    });
    for rec in shards.into_iter().flatten() {
        log.push(rec.source, rec.steps, rec.aborted);
    }
    log
}

/// Runs a seeded campaign. Seeds (the empty trace if none) are executed
/// once each, then `cfg.iterations` mutated traces. A trace whose output
/// sequence has an unseen prefix joins the mutation queue.
pub fn fuzz_campaign(sut: &mut dyn SutSession, seeds: &[Vec<Symbol>], cfg: &FuzzConfig) -> Result<TraceLog, FuzzError> {
    campaign(sut, seeds, cfg, TraceSource::Fuzz)
}

/// A campaign seeded with the access sequences of `model`; seed runs are
/// tagged `guided`.
pub fn guided_campaign(sut: &mut dyn SutSession, model: &MealyMachine, cfg: &FuzzConfig) -> Result<TraceLog, FuzzError> {
    campaign(sut, &model_guided_traces(model), cfg, TraceSource::Guided)
}

fn campaign(
    sut: &mut dyn SutSession,
    seeds: &[Vec<Symbol>],
    cfg: &FuzzConfig,
    seed_source: TraceSource,
) -> Result<TraceLog, FuzzError> {
    let inputs = sut.descriptor().inputs.clone();
    let seeds = prepare_seeds(&inputs, seeds, cfg)?;
    let mut worker = Worker::new(cfg, &inputs, &seeds, 0);
    let shard = worker.run(sut, Some(seed_source), cfg.iterations)?;
    let name = sut.descriptor().name.clone();
    Ok(assemble(&name, cfg, seed_source == TraceSource::Guided, 1, vec![shard]))
}

/// Splits the iterations over `jobs` workers, each with its own session
/// from `open` and its own random stream. Shards are concatenated in worker
/// order, so the log depends only on the arguments. With one job the result
/// equals [`fuzz_campaign`] (or [`guided_campaign`] when `guided`).
pub fn fuzz_campaign_sharded<F>(
    open: F,
    seeds: &[Vec<Symbol>],
    cfg: &FuzzConfig,
    jobs: usize,
    guided: bool,
) -> Result<TraceLog, FuzzError>
where
    F: Fn() -> Result<Box<dyn SutSession>, SutError> + Sync,
{
    if jobs == 0 {
        return Err(FuzzError::Config("jobs must be positive".into()));
    }
    let probe = open()?;
    let inputs = probe.descriptor().inputs.clone();
    let name = probe.descriptor().name.clone();
    drop(probe);
    let seeds = prepare_seeds(&inputs, seeds, cfg)?;
    let seed_source = if guided { TraceSource::Guided } else { TraceSource::Fuzz };

    let shards: Vec<Result<Vec<Recorded>, FuzzError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let share = cfg.iterations / jobs + usize::from(w < cfg.iterations % jobs);
                let (open, inputs, seeds) = (&open, &inputs, &seeds);
                scope.spawn(move || {
                    let mut sut = open()?;
                    let mut worker = Worker::new(cfg, inputs, seeds, w as u64);
                    worker.run(sut.as_mut(), (w == 0).then_some(seed_source), share)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fuzz worker panicked"))
            .collect()
    });
    let shards = shards.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(&name, cfg, guided, jobs, shards))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::symbols;
    use crate::sut::{open_builtin, Variant};

    fn cfg(seed: u64, iterations: usize) -> FuzzConfig {
        FuzzConfig {
            seed,
            iterations,
            ..FuzzConfig::default()
        }
    }

    #[test]
    fn guided_seeds_for_variant_a() {
        let mut traces = model_guided_traces(&Variant::A.model());
        traces.sort();
        let mut expected = vec![
            vec![],
            symbols(&["USER"]),
            symbols(&["USER", "PASS"]),
            symbols(&["USER", "PASS", "RNFR"]),
            symbols(&["QUIT"]),
        ];
        expected.sort();
        assert_eq!(traces, expected);
    }

    #[test]
    fn campaign_is_deterministic() {
        let seeds = vec![symbols(&["USER", "PASS"])];
        let run = || {
            let mut sut = open_builtin("varA").unwrap();
            fuzz_campaign(&mut sut, &seeds, &cfg(42, 200)).unwrap().to_jsonl()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_malformed_ratio_never_corrupts() {
        let mut sut = open_builtin("varA").unwrap();
        let log = fuzz_campaign(&mut sut, &[], &cfg(5, 300)).unwrap();
        assert!(log.entries.iter().all(|t| t.steps.iter().all(|s| !s.input.is_malformed())));
        assert_eq!(log.len(), 301);
    }

    #[test]
    fn traces_respect_length_bound() {
        let mut sut = open_builtin("varB").unwrap();
        let c = FuzzConfig {
            max_trace_len: 5,
            malformed_ratio: 0.2,
            ..cfg(11, 300)
        };
        let log = fuzz_campaign(&mut sut, &[symbols(&["USER", "PASS", "LIST"])], &c).unwrap();
        assert!(log.entries.iter().all(|t| t.steps.len() <= 5));
        assert!(log.entries.iter().any(|t| t.steps.iter().any(|s| s.input.is_malformed())));
    }

    #[test]
    fn single_job_matches_plain_campaign() {
        let seeds = vec![symbols(&["USER"])];
        let mut sut = open_builtin("varA").unwrap();
        let plain = fuzz_campaign(&mut sut, &seeds, &cfg(8, 50)).unwrap();
        let open = || open_builtin("varA").map(|s| Box::new(s) as Box<dyn SutSession>);
        let sharded = fuzz_campaign_sharded(open, &seeds, &cfg(8, 50), 1, false).unwrap();
        assert_eq!(plain.entries, sharded.entries);
        let four = fuzz_campaign_sharded(open, &seeds, &cfg(8, 50), 4, false).unwrap();
        assert_eq!(four.len(), 51);
        assert_eq!(four.to_jsonl(), fuzz_campaign_sharded(open, &seeds, &cfg(8, 50), 4, false).unwrap().to_jsonl());
    }

    #[test]
    fn bad_config_and_seeds_are_rejected() {
        let mut sut = open_builtin("varA").unwrap();
        let zero = FuzzConfig {
            weights: MutationWeights {
                swap: 0,
                drop: 0,
                duplicate: 0,
                insert: 0,
                corrupt: 0,
            },
            ..cfg(0, 10)
        };
        assert!(matches!(fuzz_campaign(&mut sut, &[], &zero), Err(FuzzError::Config(_))));
        assert!(matches!(
            fuzz_campaign(&mut sut, &[symbols(&["NOPE"])], &cfg(0, 10)),
            Err(FuzzError::Seed { index: 0, .. })
        ));
    }
}
