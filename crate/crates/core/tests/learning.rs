mod common;

use std::time::Instant;

use proptest::prelude::*;
use statelearn::active::{
    find_unclosed, learn_active, ActiveError, EquivalenceConfig, EquivalenceMode, Learner, ObservationTable, QueryOracle,
};
use statelearn::automata::{check_equivalence, symbols, Symbol};
use statelearn::passive::{build_pta, learn_passive, MergeConfig, PassiveError, UNOBSERVED};
use statelearn::sut::{open_builtin, ModelSut, SutDescriptor, SutError, SutSession, Variant};
use statelearn::trace::{zip_steps, LogHeader, TraceLog, TraceSource};

use common::{exhaustive_log, log_from_words, machine, oracle_equivalent};

fn exhaustive(depth: usize) -> EquivalenceConfig {
    EquivalenceConfig {
        mode: EquivalenceMode::Exhaustive,
        depth_bound: depth,
        ..EquivalenceConfig::default()
    }
}

#[test]
fn exhaustive_learning_recovers_every_builtin() {
    let start = Instant::now();
    for v in Variant::ALL {
        let mut sut = open_builtin(v.name()).unwrap();
        let inputs = sut.descriptor().inputs.clone();
        let result = learn_active(&mut sut, &inputs, &exhaustive(6)).unwrap();
        assert_eq!(result.model.state_count(), 5, "{v}");
        assert!(check_equivalence(&result.model, &v.model()).unwrap().is_equivalent(), "{v}");
        assert!(oracle_equivalent(&result.model, &v.model()));
        assert!(result.rounds.last().unwrap().counterexample.is_none());
    }
    assert!(start.elapsed().as_secs() < 10);
}

#[test]
fn w_method_and_random_walk_also_converge() {
    for mode in [EquivalenceMode::WMethod, EquivalenceMode::RandomWalk] {
        for v in Variant::ALL {
            let mut sut = open_builtin(v.name()).unwrap();
            let inputs = sut.descriptor().inputs.clone();
            let eq = EquivalenceConfig {
                mode,
                seed: 7,
                ..EquivalenceConfig::default()
            };
            let result = learn_active(&mut sut, &inputs, &eq).unwrap();
            assert!(check_equivalence(&result.model, &v.model()).unwrap().is_equivalent(), "{v} {mode:?}");
        }
    }
}

#[test]
fn variant_c_without_malformed_is_variant_a() {
    let alphabet = symbols(&["USER", "PASS", "LIST", "RNFR", "RNTO", "QUIT"]);
    let mut sut = open_builtin("varC").unwrap();
    let result = learn_active(&mut sut, &alphabet, &exhaustive(6)).unwrap();
    let a = Variant::A.model().restrict_inputs(&alphabet).unwrap();
    assert!(check_equivalence(&result.model, &a).unwrap().is_equivalent());
    assert!(oracle_equivalent(&result.model, &a));
}

#[test]
fn learning_log_has_one_line_per_round() {
    let mut sut = open_builtin("varB").unwrap();
    let inputs = sut.descriptor().inputs.clone();
    let result = learn_active(&mut sut, &inputs, &exhaustive(4)).unwrap();
    let log = result.log_jsonl();
    assert_eq!(log.lines().count(), result.rounds.len());
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(first["round"], 1);
}

#[test]
fn initial_table_is_not_closed() {
    let mut sut = open_builtin("varA").unwrap();
    let inputs = sut.descriptor().inputs.clone();
    let mut oracle = QueryOracle::new(&mut sut, &inputs).unwrap();
    let mut table = ObservationTable::new(&inputs);
    table.fill(&mut oracle).unwrap();
    let user = symbols(&["USER"]);
    let pass = symbols(&["PASS"]);
    assert_eq!(table.cell(&[], &pass).unwrap().as_str(), "R530");
    assert_eq!(table.cell(&user, &pass).unwrap().as_str(), "R230");
    let unclosed = find_unclosed(&table).expect("initial table is unclosed");
    assert_ne!(table.row(&unclosed), table.row(&[]));
}

#[test]
fn stabilized_table_yields_hypothesis() {
    let mut sut = open_builtin("varA").unwrap();
    let inputs = sut.descriptor().inputs.clone();
    let mut learner = Learner::new(&mut sut, &inputs).unwrap();
    learner.stabilize().unwrap();
    let h = learner.hypothesis().unwrap();
    assert!(h.state_count() >= 2);
    let ce = learner.find_counterexample(&h, &exhaustive(6)).unwrap();
    if let Some(ce) = ce {
        assert_ne!(h.run(&ce).unwrap(), Variant::A.model().run(&ce).unwrap());
    }
}

/// Answers `USER` alternately with two outputs.
struct Flaky {
    descriptor: SutDescriptor,
    flip: bool,
}

impl SutSession for Flaky {
    fn descriptor(&self) -> &SutDescriptor {
        &self.descriptor
    }

    fn reset(&mut self) -> Result<(), SutError> {
        Ok(())
    }

    fn query(&mut self, _: &Symbol) -> Result<Symbol, SutError> {
        self.flip = !self.flip;
        Ok(Symbol::new(if self.flip { "A" } else { "B" }).unwrap())
    }
}

#[test]
fn nondeterminism_is_reported() {
    let mut sut = Flaky {
        descriptor: SutDescriptor {
            name: "flaky".into(),
            inputs: symbols(&["USER"]),
        },
        flip: false,
    };
    let err = learn_active(&mut sut, &symbols(&["USER"]), &exhaustive(3)).unwrap_err();
    assert!(matches!(err, ActiveError::Nondeterministic { .. }), "{err}");
}

#[test]
fn bad_alphabets_are_rejected() {
    let mut sut = open_builtin("varA").unwrap();
    assert!(matches!(learn_active(&mut sut, &[], &exhaustive(2)), Err(ActiveError::EmptyAlphabet)));
    assert!(learn_active(&mut sut, &symbols(&["NOPE"]), &exhaustive(2)).is_err());
    let huge = exhaustive(9);
    let inputs = sut.descriptor().inputs.clone();
    assert!(matches!(learn_active(&mut sut, &inputs, &huge), Err(ActiveError::Budget { .. })));
}

#[test]
fn passive_learning_converges_on_exhaustive_data() {
    for v in Variant::ALL {
        let start = Instant::now();
        let model = v.model();
        let result = learn_passive(&exhaustive_log(&model, 6), &MergeConfig::default()).unwrap();
        assert!(check_equivalence(&result.model, &model).unwrap().is_equivalent(), "{v}");
        assert_eq!(result.model.state_count(), 5);
        assert!(start.elapsed().as_secs() < 30);
    }
}

#[test]
fn passive_model_keeps_malformed_only_where_observed() {
    let model = Variant::C.model();
    let words = vec![symbols(&["USER", "MALFORMED", "PASS"]), symbols(&["USER", "PASS", "LIST"])];
    let result = learn_passive(&log_from_words(&model, &words), &MergeConfig::default()).unwrap();
    assert!(result.model.inputs().iter().any(|s| s.is_malformed()));
    assert!(!result.model.inputs().iter().any(|s| s == "RNFR"));
    assert!(result.model.outputs().iter().any(|s| s == UNOBSERVED));
    for w in &words {
        assert_eq!(result.model.run(w).unwrap(), model.run(w).unwrap());
    }
    let log = result.merge_log_jsonl();
    assert_eq!(log.lines().count(), result.merges.len());
}

fn inconsistent_log() -> impl Strategy<Value = (TraceLog, usize)> {
    (1usize..6, 0usize..6, prop::collection::vec(0usize..3, 1..6)).prop_map(|(len, pos, prefix_out)| {
        let inputs: Vec<Symbol> = (0..len).map(|i| Symbol::new(&format!("i{}", i % 2)).unwrap()).collect();
        let outs: Vec<Symbol> = (0..len)
            .map(|i| Symbol::new(&format!("o{}", prefix_out[i % prefix_out.len()])).unwrap())
            .collect();
        let pos = pos % len;
        let mut other = outs.clone();
        other[pos] = Symbol::new("clash").unwrap();
        let mut log = TraceLog::new(LogHeader::manual("t"));
        log.push(TraceSource::Manual, zip_steps(&inputs, &outs), false);
        log.push(TraceSource::Manual, zip_steps(&inputs[..=pos], &other[..=pos]), false);
        (log, pos)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pta_rejects_conflicting_logs((log, pos) in inconsistent_log()) {
        match build_pta(&log) {
            Err(PassiveError::Conflict { trace_id, step, .. }) => {
                prop_assert_eq!(trace_id, 1);
                prop_assert_eq!(step, pos);
            }
            other => prop_assert!(false, "expected a conflict, got {:?}", other.map(|p| p.node_count())),
        }
    }

    #[test]
    fn passive_model_reproduces_its_data(m in machine(), lens in prop::collection::vec(0usize..8, 1..12), seed in any::<u64>()) {
        let k = m.inputs().len();
        let words: Vec<Vec<Symbol>> = lens
            .iter()
            .enumerate()
            .map(|(i, &len)| (0..len).map(|j| m.inputs()[(seed as usize).wrapping_add(i * 31 + j * 7) % k].clone()).collect())
            .collect();
        let result = learn_passive(&log_from_words(&m, &words), &MergeConfig::default()).unwrap();
        for w in &words {
            prop_assert_eq!(result.model.run(w).unwrap(), m.run(w).unwrap());
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Depth 5 covers any machine with at most six states, even against a
    // one-state hypothesis.
    #[test]
    fn active_learning_recovers_random_machines(m in machine()) {
        let mut sut = ModelSut::new("random", m.clone());
        let inputs = m.inputs().to_vec();
        let eq = EquivalenceConfig { mode: EquivalenceMode::WMethod, depth_bound: 5, ..EquivalenceConfig::default() };
        let result = learn_active(&mut sut, &inputs, &eq).unwrap();
        prop_assert!(oracle_equivalent(&result.model, &m));
        prop_assert_eq!(result.model.state_count(), common::oracle_class_count(&m));
    }
}
