//! Model-level integration tests: the shipped AccMan fixture, validation
//! clause coverage, and round-trip properties.

use std::collections::BTreeSet;

use proptest::prelude::*;
use restmut_core::doc::{load, store};
use restmut_core::gen::{self, GenConfig};
use restmut_core::traverse::{events_at, pass_sequences};
use restmut_core::validate::{validate, Clause};
use restmut_core::{labels, Direction, Event, EventParams, TestCase, TestStep};

fn fixture_bytes() -> Vec<u8> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/accman_checkrisk.json");
    std::fs::read(path).expect("fixture present")
}

fn accman() -> TestCase {
    load(&fixture_bytes()).expect("fixture loads")
}

#[test]
fn accman_fixture_is_valid() {
    let report = validate(&accman());
    assert!(report.is_valid(), "{report}");
}

#[test]
fn accman_fixture_is_canonical() {
    let bytes = fixture_bytes();
    let tc = load(&bytes).unwrap();
    assert_eq!(store(&tc), bytes, "shipped fixture must round-trip byte-identically");
}

#[test]
fn accman_initial_state_offers_the_check_request() {
    let tc = accman();
    let events = events_at(&tc, "q0").unwrap();
    assert_eq!(events.len(), 1);
    let e = events[0].unwrap();
    assert_eq!(e.rendered(), "?/checkAccountRisk");
    assert_eq!(e.to(), "AccMan");
}

#[test]
fn accman_has_exactly_one_pass_sequence_of_four_steps() {
    let tc = accman();
    let seqs = pass_sequences(&tc);
    assert_eq!(seqs.len(), 1);
    assert_eq!(seqs[0].len(), 4);
}

fn input_step(from: &str, path: &str, target: &str) -> TestStep {
    TestStep {
        source: from.into(),
        event: Some(Event {
            label: path.into(),
            direction: Direction::Input,
            params: EventParams {
                from: "Client".into(),
                to: "S".into(),
                method: Some("GET".into()),
                path: Some(path.into()),
                ..Default::default()
            },
        }),
        labels: BTreeSet::new(),
        target: target.into(),
    }
}

fn mock_response_step(from: &str, status: &str, target: &str) -> TestStep {
    TestStep {
        source: from.into(),
        event: Some(Event {
            label: "/ok".into(),
            direction: Direction::Output,
            params: EventParams {
                from: "Dep".into(),
                to: "S".into(),
                status: Some(status.into()),
                ..Default::default()
            },
        }),
        labels: [labels::MOCK.to_string()].into_iter().collect(),
        target: target.into(),
    }
}

#[test]
fn two_inputs_at_one_state_violate_input_restriction() {
    let mut tc = TestCase::skeleton("S", "q0");
    tc.states.push("q1".into());
    tc.states.push("q2".into());
    tc.steps.push(input_step("q0", "/a", "q1"));
    tc.steps.push(input_step("q0", "/b", "q2"));
    let report = validate(&tc);
    assert!(report.has(Clause::InputRestricted), "{report}");
}

#[test]
fn two_mock_responses_at_one_state_violate_mock_restriction() {
    let mut tc = TestCase::skeleton("S", "q0");
    tc.states.push("q1".into());
    tc.states.push("q2".into());
    tc.steps.push(mock_response_step("q0", "200", "q1"));
    tc.steps.push(mock_response_step("q0", "503", "q2"));
    let report = validate(&tc);
    assert!(report.has(Clause::MockResponseRestricted), "{report}");
}

#[test]
fn duplicate_events_violate_determinism() {
    let mut tc = TestCase::skeleton("S", "q0");
    tc.states.push("q1".into());
    tc.states.push("q2".into());
    let mut a = mock_response_step("q0", "200", "q1");
    let mut b = mock_response_step("q0", "200", "q2");
    a.labels.clear();
    b.labels.clear();
    tc.steps.push(a);
    tc.steps.push(b);
    assert!(validate(&tc).has(Clause::Deterministic));
}

#[test]
fn non_theta_verdict_loop_and_reconvergence_are_flagged() {
    let mut tc = TestCase::skeleton("S", "q0");
    tc.states.push("q1".into());
    // Reconvergence: two steps into q1.
    tc.steps.push(input_step("q0", "/a", "q1"));
    tc.steps.push(mock_response_step("q0", "200", "q1"));
    assert!(validate(&tc).has(Clause::TreeShaped));

    let mut tc2 = TestCase::skeleton("S", "q0");
    tc2.steps.push(mock_response_step("pass", "200", "pass"));
    assert!(validate(&tc2).has(Clause::VerdictTerminal));
}

#[test]
fn validate_is_pure() {
    let tc = accman();
    assert_eq!(validate(&tc), validate(&tc));
}

#[test]
fn pass_sequences_are_connected_paths() {
    let cfg = GenConfig::default();
    let mut rng = gen::seeded_rng(23);
    for _ in 0..100 {
        let tc = gen::random_test_case(&mut rng, &cfg);
        for seq in pass_sequences(&tc) {
            assert!(!seq.is_empty());
            assert_eq!(tc.steps[seq[0]].source, tc.initial);
            for pair in seq.windows(2) {
                assert_eq!(tc.steps[pair[0]].target, tc.steps[pair[1]].source);
            }
            let last = &tc.steps[*seq.last().unwrap()];
            assert_eq!(last.target, tc.verdicts.pass);
        }
    }
}

#[test]
fn input_restriction_holds_on_generated_corpus() {
    let cfg = GenConfig::default();
    for tc in gen::corpus(5, 100, &cfg) {
        for state in &tc.states {
            let events = events_at(&tc, state).unwrap();
            let inputs = events
                .iter()
                .filter(|e| e.is_some_and(|e| e.direction == Direction::Input))
                .count();
            let has_theta = events.iter().any(|e| e.is_none());
            assert!(inputs <= 1);
            assert!(!(has_theta && inputs > 0));
        }
    }
}

proptest! {
    // store ∘ load is idempotent: loading what store wrote and storing again
    // reproduces the same bytes, over the generated corpus.
    #[test]
    fn store_load_is_idempotent(seed in 0u64..5_000) {
        let cfg = GenConfig::default();
        let mut rng = gen::seeded_rng(seed);
        let tc = gen::random_test_case(&mut rng, &cfg);
        let first = store(&tc);
        let reloaded = load(&first).expect("store output loads");
        prop_assert_eq!(store(&reloaded), first);
    }

    #[test]
    fn loaded_cases_keep_their_step_count(seed in 0u64..2_000) {
        let cfg = GenConfig::default();
        let mut rng = gen::seeded_rng(seed);
        let tc = gen::random_test_case(&mut rng, &cfg);
        let reloaded = load(&store(&tc)).unwrap();
        prop_assert_eq!(reloaded.steps.len(), tc.steps.len());
        prop_assert_eq!(reloaded, tc);
    }
}
