//! Engine integration tests: mutable-step detection, the mutation loop, the
//! selection strategies, and the full operator chain across the catalog.

use std::collections::BTreeSet;

use restmut_core::doc::{load, store};
use restmut_core::gen::{self, GenConfig};
use restmut_core::validate::validate;
use restmut_core::{labels, params, Direction, Event, EventParams, Headers, TestCase, TestStep, WILDCARD};
use restmut_engine::{
    is_completed, mark, mutable_steps, mutable_steps_on_pass, mutate, mutate_marked, Strategy,
};
use restmut_ops::{by_slug, catalog, MutationContext, OperatorConfig, Variant};

fn accman() -> TestCase {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/accman_checkrisk.json");
    load(&std::fs::read(path).unwrap()).unwrap()
}

fn config() -> OperatorConfig {
    OperatorConfig {
        expired_token: Some("expired-token".into()),
        // Keep the structural suites fast; the shipped default is 1 MiB.
        overflow_size: 4096,
        ..OperatorConfig::default()
    }
}

fn request(source: &str, target: &str, path: &str, step_labels: &[&str]) -> TestStep {
    TestStep {
        source: source.into(),
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
        labels: step_labels.iter().map(|s| s.to_string()).collect(),
        target: target.into(),
    }
}

fn response(source: &str, target: &str, status: &str) -> TestStep {
    TestStep {
        source: source.into(),
        event: Some(Event {
            label: "/ok".into(),
            direction: Direction::Output,
            params: EventParams {
                from: "S".into(),
                to: "Client".into(),
                status: Some(status.into()),
                ..Default::default()
            },
        }),
        labels: BTreeSet::new(),
        target: target.into(),
    }
}

/// Linear chain of `n` requests to the SUT followed by one 200 response into
/// pass.
fn linear_requests(n: usize) -> TestCase {
    let mut tc = TestCase::skeleton("S", "q0");
    let mut current = "q0".to_string();
    for i in 0..n {
        let next = tc.add_fresh_state("q");
        tc.steps.push(request(&current, &next, &format!("/p{i}"), &[]));
        current = next;
    }
    tc.steps.push(response(&current, "pass", "200"));
    tc
}

/// One test case on which every catalog operator has a mutable step: a login
/// request with body, cookie and token, then a dependee exchange whose mock
/// response creates a token.
fn rich_fixture() -> TestCase {
    let mut tc = TestCase::skeleton("S", "q0");
    for q in ["q1", "q2", "q3"] {
        tc.states.push(q.into());
    }
    let mut login = request("q0", "q1", "/login", &[labels::LOGIN, labels::TOKEN]);
    {
        let e = login.event.as_mut().unwrap();
        e.params.method = Some("POST".into());
        e.params.body = Some("user=a&pass=b".into());
        e.params.headers.push("token", "tok-1");
        e.params.cookies.insert("sessionid".into(), "s1".into());
    }
    tc.steps.push(login);
    tc.steps.push(TestStep {
        source: "q1".into(),
        event: Some(Event {
            label: "/depcall".into(),
            direction: Direction::Output,
            params: EventParams {
                from: "S".into(),
                to: "Dep".into(),
                method: Some("GET".into()),
                path: Some("/depcall".into()),
                ..Default::default()
            },
        }),
        labels: [labels::MOCK.to_string()].into_iter().collect(),
        target: "q2".into(),
    });
    tc.steps.push(TestStep {
        source: "q2".into(),
        event: Some(Event {
            label: "/ok".into(),
            direction: Direction::Output,
            params: EventParams {
                from: "Dep".into(),
                to: "S".into(),
                status: Some("200".into()),
                body: Some("fresh".into()),
                headers: Headers::from_pairs([("token", "tok-2")]),
                ..Default::default()
            },
        }),
        labels: [labels::MOCK, labels::TOKEN_CREATION, labels::TOKEN]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        target: "q3".into(),
    });
    tc.steps.push(response("q3", "pass", "200"));
    assert!(validate(&tc).is_valid());
    tc
}

#[test]
fn token_removal_has_two_mutable_steps_on_accman() {
    let tc = accman();
    let op = by_slug("token-removal").unwrap();
    let steps = mutable_steps(op, &tc);
    // The client request and the mock response both carry the token and are
    // directed at the SUT; the dependee call and the final response are not.
    assert_eq!(steps, vec![0, 2]);
    assert_eq!(mutable_steps_on_pass(op, &tc), vec![0, 2]);
}

#[test]
fn no_sut_directed_event_means_no_mutable_step() {
    let mut tc = TestCase::skeleton("S", "q0");
    tc.steps.push(response("q0", "pass", "200")); // S -> Client, to != SUT
    for op in catalog() {
        assert!(mutable_steps(op, &tc).is_empty(), "{}", op.slug);
    }
}

#[test]
fn verb_change_on_three_request_chain_matches_bruteforce() {
    let tc = linear_requests(3);
    let op = by_slug("verb-change").unwrap();
    // Independent conjunct check per step.
    let expected: Vec<usize> = tc
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            s.event.as_ref().is_some_and(|e| {
                e.to() == tc.sut_id
                    && e.is_request()
                    && (e.direction == Direction::Input || s.has_label(labels::MOCK))
            })
        })
        .map(|(i, _)| i)
        .collect();
    assert_eq!(expected.len(), 3);
    assert_eq!(mutable_steps(op, &tc), expected);
}

#[test]
fn mark_adds_the_mutation_label_and_nothing_else() {
    let tc = accman();
    let marked = mark(&tc, 2).unwrap();
    assert!(marked.steps[2].has_label(labels::MUTATION));
    assert!(marked.steps[2].has_label(labels::MOCK));
    for i in [0, 1, 3] {
        assert_eq!(marked.steps[i], tc.steps[i]);
    }
    // Original untouched, marking twice is idempotent.
    assert!(!tc.steps[2].has_label(labels::MUTATION));
    let twice = mark(&marked, 2).unwrap();
    assert_eq!(twice, marked);

    assert!(mark(&tc, 99).is_err());
}

#[test]
fn token_removal_on_mock_response_reproduces_the_expected_mutant_shape() {
    let tc = accman();
    let op = by_slug("token-removal").unwrap();
    let cfg = config();
    let ctx = MutationContext { config: &cfg, seed: 42, foreign_tokens: &[] };
    let record = mutate_marked(&tc, "accman", 2, op, &Variant { index: 0, name: "default" }, &ctx).unwrap();
    let m = &record.mutant;

    assert!(validate(m).is_valid(), "{}", validate(m));
    assert!(is_completed(m));

    // Token deleted from the mutated mock response.
    let mutated = m
        .steps
        .iter()
        .find(|s| s.has_label(labels::MUTATION))
        .expect("marked step kept");
    assert!(mutated.event.as_ref().unwrap().header("token").is_none());
    assert_eq!(mutated.event.as_ref().unwrap().body(), "LOWRISK");

    // The original continuation to pass is gone, replaced by the rejection
    // branch: any SUT output with status 401 or 403 passes.
    let branch = m
        .steps
        .iter()
        .find(|s| {
            s.source == mutated.target
                && s.target == m.verdicts.pass
                && s.event.as_ref().is_some_and(|e| e.label == WILDCARD)
        })
        .expect("pass branch present");
    let be = branch.event.as_ref().unwrap();
    assert_eq!(be.status(), Some("401|403"));
    assert_eq!(be.from(), "AccMan");
    // Completion branches exist alongside it.
    assert!(m.outgoing(&mutated.target).any(|(_, s)| s.target == m.verdicts.inc));
    assert!(m.outgoing(&mutated.target).any(|(_, s)| s.is_quiescence() && s.target == m.verdicts.fail));

    // The prefix (request + dependee call) is intact, so mock rules can still
    // be derived.
    assert_eq!(m.steps[0].event, tc.steps[0].event);
    assert_eq!(m.steps[1].event, tc.steps[1].event);
}

#[test]
fn token_removal_s0_yields_one_mutant_per_mutable_step() {
    let tc = accman();
    let op = by_slug("token-removal").unwrap();
    let outcome = mutate(&[("accman".into(), tc)], op, &Strategy::s0(), &config(), 1, &[]);
    assert!(outcome.rejected.is_empty(), "{:?}", outcome.rejected);
    assert_eq!(outcome.records.len(), 2);
    let steps: Vec<usize> = outcome.records.iter().map(|r| r.origin.step).collect();
    assert_eq!(steps, vec![0, 2]);
}

#[test]
fn s2_emits_the_first_two_candidates_in_canonical_order() {
    // Five mutable steps; replaying the loop by hand takes steps 0 and 1.
    let tc = linear_requests(5);
    let op = by_slug("session-mgmt").unwrap();
    let outcome = mutate(&[("chain".into(), tc)], op, &Strategy::s2(2), &config(), 1, &[]);
    assert_eq!(outcome.records.len(), 2);
    let steps: Vec<usize> = outcome.records.iter().map(|r| r.origin.step).collect();
    assert_eq!(steps, vec![0, 1]);
}

#[test]
fn s1_collapses_repeated_events_to_one_mutant() {
    // The same request event three times in a row.
    let mut tc = TestCase::skeleton("S", "q0");
    let mut current = "q0".to_string();
    for _ in 0..3 {
        let next = tc.add_fresh_state("q");
        tc.steps.push(request(&current, &next, "/same", &[]));
        current = next;
    }
    tc.steps.push(response(&current, "pass", "200"));
    assert!(validate(&tc).is_valid());

    let op = by_slug("verb-change").unwrap();
    let sources = vec![("rep".to_string(), tc)];
    let s1 = mutate(&sources, op, &Strategy::s1(), &config(), 1, &[]);
    assert_eq!(s1.records.len(), 1);
    let s0 = mutate(&sources, op, &Strategy::s0(), &config(), 1, &[]);
    assert_eq!(s0.records.len(), 3);
}

#[test]
fn fail_only_test_cases_yield_no_mutants() {
    let mut tc = TestCase::skeleton("S", "q0");
    tc.states.push("q1".into());
    tc.steps.push(request("q0", "q1", "/x", &[]));
    tc.steps.push(response("q1", "fail", "500"));
    for op in catalog() {
        let outcome = mutate(&[("failer".into(), tc.clone())], op, &Strategy::s0(), &config(), 1, &[]);
        assert!(outcome.records.is_empty(), "{}", op.slug);
    }
}

#[test]
fn invalid_sources_are_rejected_with_their_id() {
    let mut tc = TestCase::skeleton("S", "q0");
    tc.states.push("q1".into());
    tc.states.push("q2".into());
    tc.steps.push(request("q0", "q1", "/a", &[]));
    tc.steps.push(request("q0", "q2", "/b", &[])); // second input: invalid
    let op = by_slug("verb-change").unwrap();
    let outcome = mutate(&[("broken".into(), tc)], op, &Strategy::s0(), &config(), 1, &[]);
    assert!(outcome.records.is_empty());
    assert_eq!(outcome.rejected.len(), 1);
    assert_eq!(outcome.rejected[0].0, "broken");
}

#[test]
fn every_catalog_operator_produces_valid_completed_mutants() {
    let tc = rich_fixture();
    let cfg = config();
    let ctx = MutationContext { config: &cfg, seed: 7, foreign_tokens: &["other-tok".into()] };
    for op in catalog() {
        let steps = mutable_steps_on_pass(op, &tc);
        assert!(!steps.is_empty(), "operator {} has no mutable step on the rich fixture", op.slug);
        for variant in op.variants(&ctx) {
            let record = mutate_marked(&tc, "rich", steps[0], op, &variant, &ctx)
                .unwrap_or_else(|e| panic!("{}/{}: {e}", op.slug, variant.name));
            let report = validate(&record.mutant);
            assert!(report.is_valid(), "{}/{}: {report}", op.slug, variant.name);
            assert!(is_completed(&record.mutant), "{}/{}", op.slug, variant.name);

            // Every pass branch added by Expected originates from the SUT.
            let marked_target = record
                .mutant
                .steps
                .iter()
                .find(|s| s.has_label(labels::MUTATION))
                .map(|s| s.target.clone())
                .unwrap();
            let pass_branches: Vec<&TestStep> = record
                .mutant
                .steps
                .iter()
                .filter(|s| {
                    s.target == record.mutant.verdicts.pass
                        && s.event.as_ref().is_some_and(|e| e.label == WILDCARD)
                })
                .collect();
            assert!(!pass_branches.is_empty(), "{}/{}", op.slug, variant.name);
            for b in &pass_branches {
                assert_eq!(b.event.as_ref().unwrap().from(), "S", "{}/{}", op.slug, variant.name);
            }
            let _ = marked_target;
        }
    }
}

#[test]
fn change_only_touches_the_marked_step_and_its_suffix() {
    let tc = rich_fixture();
    let cfg = config();
    let ctx = MutationContext { config: &cfg, seed: 7, foreign_tokens: &[] };
    // Mutate the mock response (step 2): the prefix steps 0 and 1 must be
    // byte-identical to the original.
    let op = by_slug("dependee-shutdown").unwrap();
    let record = mutate_marked(&tc, "rich", 2, op, &Variant { index: 0, name: "default" }, &ctx).unwrap();
    assert_eq!(record.mutant.steps[0], tc.steps[0]);
    assert_eq!(record.mutant.steps[1], tc.steps[1]);
}

/// Matcher oracle used to show the pass branch is unreachable by the
/// original, unmutated response: a tiny independent evaluation of the
/// matcher params against a concrete observation.
fn matcher_accepts(matcher: &Event, status: u16, body: &str, crashed: bool) -> bool {
    if let Some(pattern) = matcher.status() {
        let ok = match pattern {
            WILDCARD => true,
            p if p.contains("..") => {
                let (lo, hi) = p.split_once("..").unwrap();
                let (lo, hi): (u16, u16) = (lo.parse().unwrap(), hi.parse().unwrap());
                (lo..=hi).contains(&status)
            }
            p => p.split('|').any(|alt| alt.parse() == Ok(status)),
        };
        if !ok {
            return false;
        }
    }
    if let Some(needle) = matcher.params.extra.get(params::BODY_CONTAINS) {
        if !body.to_lowercase().contains(&needle.to_lowercase()) {
            return false;
        }
    }
    if let Some(needle) = matcher.params.extra.get(params::BODY_NOT_CONTAINS) {
        if body.to_lowercase().contains(&needle.to_lowercase()) {
            return false;
        }
    }
    if matcher.params.extra.get(params::NOT_CRASH).is_some() && crashed {
        return false;
    }
    if matcher.params.extra.get(params::TRANSPORT_REJECTED).is_some() {
        return false; // a normal response is never a transport rejection
    }
    true
}

#[test]
fn pass_branches_are_unreachable_by_the_unmutated_response() {
    // The original fixtures answer 200 "LOWRISK"/"fresh" without crashing.
    // Event Duplication and Stress Testing accept any non-crash success by
    // design, so they are excluded here.
    let tc = rich_fixture();
    let cfg = config();
    let ctx = MutationContext { config: &cfg, seed: 7, foreign_tokens: &[] };
    for op in catalog() {
        if matches!(op.slug, "event-dup" | "stress") {
            continue;
        }
        let steps = mutable_steps_on_pass(op, &tc);
        let record = mutate_marked(&tc, "rich", steps[0], op, &op.variants(&ctx)[0], &ctx).unwrap();
        for branch in record.mutant.steps.iter().filter(|s| {
            s.target == record.mutant.verdicts.pass
                && s.event.as_ref().is_some_and(|e| e.label == WILDCARD)
        }) {
            assert!(
                !matcher_accepts(branch.event.as_ref().unwrap(), 200, "LOWRISK", false),
                "{}: original 200 response satisfies the pass branch",
                op.slug
            );
        }
    }
}

#[test]
fn mutation_is_deterministic_given_seed() {
    let sources: Vec<(String, TestCase)> = gen::corpus(99, 20, &GenConfig::default())
        .into_iter()
        .enumerate()
        .map(|(i, tc)| (format!("g{i}"), tc))
        .collect();
    let cfg = config();
    for op in [by_slug("token-alteration").unwrap(), by_slug("verb-change").unwrap()] {
        let a = mutate(&sources, op, &Strategy::s1(), &cfg, 42, &[]);
        let b = mutate(&sources, op, &Strategy::s1(), &cfg, 42, &[]);
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.id, y.id);
            assert_eq!(store(&x.mutant), store(&y.mutant));
        }
    }
}

#[test]
fn mutation_is_linear_over_disjoint_sets() {
    let cases = gen::corpus(7, 10, &GenConfig::default());
    let (left, right) = cases.split_at(5);
    let name = |prefix: &str, i: usize| format!("{prefix}{i}");
    let l: Vec<_> = left.iter().cloned().enumerate().map(|(i, tc)| (name("l", i), tc)).collect();
    let r: Vec<_> = right.iter().cloned().enumerate().map(|(i, tc)| (name("r", i), tc)).collect();
    let both: Vec<_> = l.iter().cloned().chain(r.iter().cloned()).collect();

    let op = by_slug("session-mgmt").unwrap();
    let cfg = config();
    let whole: BTreeSet<String> = mutate(&both, op, &Strategy::s0(), &cfg, 3, &[])
        .records
        .into_iter()
        .map(|m| m.id)
        .collect();
    let parts: BTreeSet<String> = mutate(&l, op, &Strategy::s0(), &cfg, 3, &[])
        .records
        .into_iter()
        .chain(mutate(&r, op, &Strategy::s0(), &cfg, 3, &[]).records)
        .map(|m| m.id)
        .collect();
    assert_eq!(whole, parts);
}

#[test]
fn strategy_counts_are_ordered() {
    let sources: Vec<(String, TestCase)> = gen::corpus(31, 30, &GenConfig::default())
        .into_iter()
        .enumerate()
        .map(|(i, tc)| (format!("g{i}"), tc))
        .collect();
    let cfg = config();
    for op in catalog() {
        let s0 = mutate(&sources, op, &Strategy::s0(), &cfg, 5, &[]).records.len();
        let s1 = mutate(&sources, op, &Strategy::s1(), &cfg, 5, &[]).records.len();
        let s2 = mutate(&sources, op, &Strategy::s2(2), &cfg, 5, &[]).records.len();
        assert!(s1 <= s0, "{}: |S1|={s1} > |S0|={s0}", op.slug);
        assert!(s2 <= 2 * sources.len(), "{}", op.slug);
    }
}

#[test]
fn s2_with_unbounded_n_is_equivalent_to_s0() {
    let sources: Vec<(String, TestCase)> = gen::corpus(13, 25, &GenConfig::default())
        .into_iter()
        .enumerate()
        .map(|(i, tc)| (format!("g{i}"), tc))
        .collect();
    let cfg = config();
    for op in catalog() {
        let s0: Vec<String> = mutate(&sources, op, &Strategy::s0(), &cfg, 2, &[])
            .records
            .into_iter()
            .map(|r| r.id)
            .collect();
        let unbounded: Vec<String> = mutate(&sources, op, &Strategy::s2(u32::MAX), &cfg, 2, &[])
            .records
            .into_iter()
            .map(|r| r.id)
            .collect();
        assert_eq!(s0, unbounded, "{}", op.slug);
    }
}

#[test]
fn only_pass_sequence_steps_are_marked() {
    // A branch to fail holds a mutable step that must never be selected.
    let mut tc = TestCase::skeleton("S", "q0");
    for q in ["q1", "q2", "q3"] {
        tc.states.push(q.into());
    }
    tc.steps.push(request("q0", "q1", "/a", &[]));
    // Response branch: 200 continues toward pass, 500 toward a dead branch.
    tc.steps.push(response("q1", "q2", "200"));
    tc.steps.push(response("q1", "q3", "500"));
    tc.steps.push(response("q2", "pass", "201"));
    tc.steps.push(TestStep {
        source: "q3".into(),
        event: Some(Event {
            label: "/retry".into(),
            direction: Direction::Input,
            params: EventParams {
                from: "Client".into(),
                to: "S".into(),
                method: Some("GET".into()),
                path: Some("/retry".into()),
                ..Default::default()
            },
        }),
        labels: BTreeSet::new(),
        target: "fail".into(),
    });
    // An input step entering fail is not allowed; route it through a state.
    let last = tc.steps.len() - 1;
    tc.states.push("q4".into());
    tc.steps[last].target = "q4".into();
    tc.steps.push(response("q4", "fail", "500"));
    assert!(validate(&tc).is_valid(), "{}", validate(&tc));

    let op = by_slug("verb-change").unwrap();
    let on_pass = mutable_steps_on_pass(op, &tc);
    assert_eq!(on_pass, vec![0], "only the pass-path request is eligible");
    let all = mutable_steps(op, &tc);
    assert_eq!(all, vec![0, 4], "the dead-branch request is mutable but off the pass path");

    let outcome = mutate(&[("branchy".into(), tc)], op, &Strategy::s0(), &config(), 1, &[]);
    assert_eq!(outcome.records.len(), 1);
    assert_eq!(outcome.records[0].origin.step, 0);
}

#[test]
fn s0_count_matches_bruteforce_enumeration_on_corpus() {
    // Independent oracle: enumerate root-to-pass paths by hand, collect the
    // steps on them, apply the three mutable conjuncts, multiply by variant
    // count.
    fn bruteforce(tc: &TestCase, op: &restmut_ops::MutationOperator, ctx: &MutationContext) -> usize {
        fn paths(tc: &TestCase, state: &str, here: &mut Vec<usize>, acc: &mut Vec<Vec<usize>>) {
            if let Some(v) = tc.verdict_of(state) {
                if v == restmut_core::Verdict::Pass {
                    acc.push(here.clone());
                }
                return;
            }
            for (id, step) in tc.steps.iter().enumerate() {
                if step.source == state && step.source != step.target {
                    here.push(id);
                    paths(tc, &step.target, here, acc);
                    here.pop();
                }
            }
        }
        let mut acc = Vec::new();
        paths(tc, &tc.initial, &mut Vec::new(), &mut acc);
        let on_pass: BTreeSet<usize> = acc.into_iter().flatten().collect();
        let eligible = on_pass
            .into_iter()
            .filter(|&id| {
                let s = &tc.steps[id];
                s.event.as_ref().is_some_and(|e| {
                    e.to() == tc.sut_id
                        && op.condition(s)
                        && (e.direction == Direction::Input || s.has_label(labels::MOCK))
                })
            })
            .count();
        eligible * op.variants(ctx).len()
    }

    let cfg = config();
    let ctx = MutationContext { config: &cfg, seed: 11, foreign_tokens: &[] };
    let corpus = gen::corpus(17, 150, &GenConfig::default());
    for (i, tc) in corpus.into_iter().enumerate() {
        let sources = vec![(format!("g{i}"), tc)];
        for op in catalog() {
            let got = mutate(&sources, op, &Strategy::s0(), &cfg, 11, &[]).records.len();
            let want = bruteforce(&sources[0].1, op, &ctx);
            assert_eq!(got, want, "case g{i}, operator {}", op.slug);
        }
    }
}
