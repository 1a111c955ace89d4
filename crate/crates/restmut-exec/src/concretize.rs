//! Turns a completed mutant into an executable test plan.
//!
//! The driver follows the pass sequence through the mutation-labeled step.
//! Mock-labeled steps are pruned from the driver's view and compiled into
//! mock rules instead; response steps become expect actions whose matcher
//! sets cover every observation (the completion branches guarantee a total
//! mapping). Remaining `*` assignments are resolved from recorded log values
//! first, seeded random values otherwise.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use restmut_core::traverse::pass_sequences;
use restmut_core::{labels, params, Direction, Event, StateId, StepId, TestCase, Verdict, WILDCARD};
use thiserror::Error;

use crate::plan::{
    DriverAction, ExpectAction, MatchOutcome, MockRule, ResponseMatcher, SendAction, TestPlan, PLAN_SCHEMA,
};

#[derive(Debug, Error)]
pub enum ConcretizeError {
    #[error("mutant has no pass-ending sequence")]
    NoPassPath,
    #[error("unresolvable structural field: {0}")]
    MissingField(String),
    #[error("mock response status \"{0}\" is not a concrete HTTP status")]
    BadStatus(String),
    #[error("quiescence continuation on the driver path is not executable")]
    UnsupportedQuiescence,
    #[error("expect action has no total matcher")]
    NoCatchAll,
}

/// Builds the plan for one mutant. Deterministic given the mutant, bindings
/// and seed.
pub fn concretize(
    mutant: &TestCase,
    operator: &str,
    mutant_id: &str,
    bindings: &BTreeMap<String, String>,
    seed: u64,
) -> Result<TestPlan, ConcretizeError> {
    let mut resolver = Resolver::new(bindings, seed, mutant_id);
    let mut tc = mutant.clone();

    // Resolve wildcards on every event the harness must emit concretely:
    // driver inputs and mock responses.
    for step in tc.steps.iter_mut() {
        let emits = match &step.event {
            Some(e) => {
                (e.direction == Direction::Input && !step.labels.contains(labels::MOCK))
                    || (step.labels.contains(labels::MOCK) && e.is_response())
            }
            None => false,
        };
        if emits {
            resolver.resolve_event(step.event.as_mut().unwrap());
        }
    }

    let seq = main_sequence(&tc).ok_or(ConcretizeError::NoPassPath)?;
    let actions = build_actions(&tc, &seq)?;
    let mock_rules = build_mock_rules(&tc, &seq)?;

    Ok(TestPlan {
        schema: PLAN_SCHEMA.to_string(),
        mutant_id: mutant_id.to_string(),
        operator: operator.to_string(),
        sut_id: tc.sut_id.clone(),
        seed,
        actions,
        mock_rules,
        bindings: resolver.resolved,
    })
}

/// The pass sequence containing the mutation-labeled step, or the first pass
/// sequence for unmutated test cases.
fn main_sequence(tc: &TestCase) -> Option<Vec<StepId>> {
    let seqs = pass_sequences(tc);
    seqs.iter()
        .find(|seq| seq.iter().any(|&s| tc.steps[s].has_label(labels::MUTATION)))
        .cloned()
        .or_else(|| seqs.into_iter().next())
}

fn build_actions(tc: &TestCase, seq: &[StepId]) -> Result<Vec<DriverAction>, ConcretizeError> {
    let sut = tc.sut_id.as_str();
    let mut actions = Vec::new();
    let mut await_from: Option<StateId> = None;

    for &step_id in seq {
        let step = &tc.steps[step_id];
        if step.has_label(labels::MOCK) {
            continue;
        }
        match &step.event {
            None => return Err(ConcretizeError::UnsupportedQuiescence),
            Some(e) if e.direction == Direction::Input => {
                if e.to() != sut {
                    return Err(ConcretizeError::MissingField(format!(
                        "input {} is not directed at the service under test",
                        e.rendered()
                    )));
                }
                actions.push(DriverAction::Send(send_action(e)?));
                await_from = Some(step.target.clone());
            }
            Some(e) if e.is_response() => {
                let anchor = await_from.clone().unwrap_or_else(|| step.source.clone());
                actions.push(DriverAction::Expect(expect_action(tc, &anchor, step_id)?));
                await_from = Some(step.target.clone());
            }
            // Output requests toward unmocked components are not observable
            // by the driver; nothing to execute.
            Some(_) => {}
        }
    }
    Ok(actions)
}

fn send_action(e: &Event) -> Result<SendAction, ConcretizeError> {
    let method = e
        .params
        .method
        .clone()
        .ok_or_else(|| ConcretizeError::MissingField(format!("missing method on request {}", e.rendered())))?;
    let path = e
        .params
        .path
        .clone()
        .ok_or_else(|| ConcretizeError::MissingField(format!("missing path on request {}", e.rendered())))?;
    let knob_u64 = |key: &str| e.params.extra.get(key).and_then(|v| v.parse::<u64>().ok());
    Ok(SendAction {
        method,
        path,
        headers: e.params.headers.clone(),
        cookies: e.params.cookies.clone(),
        body: e.params.body.clone(),
        repeat: knob_u64(params::REPEAT).map_or(1, |v| (v as u32).max(1)),
        delay_ms: knob_u64(params::DELAY_MS).unwrap_or(0),
        insecure: e.params.extra.get(params::INSECURE).map(String::as_str) == Some("true"),
    })
}

/// All non-mock output/θ steps visible from `anchor` by crossing mock-labeled
/// steps only, breadth-first.
fn visible_steps(tc: &TestCase, anchor: &str) -> Vec<StepId> {
    let mut visible = Vec::new();
    let mut frontier = vec![anchor.to_string()];
    let mut seen = vec![anchor.to_string()];
    while let Some(state) = frontier.pop() {
        for (id, step) in tc.outgoing(&state) {
            if step.source == step.target {
                continue;
            }
            if step.has_label(labels::MOCK) {
                if !seen.contains(&step.target) {
                    seen.push(step.target.clone());
                    frontier.push(step.target.clone());
                }
            } else {
                visible.push(id);
            }
        }
    }
    visible
}

fn expect_action(tc: &TestCase, anchor: &str, on_path: StepId) -> Result<ExpectAction, ConcretizeError> {
    let sut = tc.sut_id.as_str();
    let mut matchers: Vec<ResponseMatcher> = Vec::new();
    let mut quiescence: Option<Verdict> = None;

    for id in visible_steps(tc, anchor) {
        let step = &tc.steps[id];
        match &step.event {
            None => {
                let verdict = tc
                    .verdict_of(&step.target)
                    .ok_or(ConcretizeError::UnsupportedQuiescence)?;
                quiescence.get_or_insert(verdict);
            }
            Some(e) if e.is_response() => {
                // Only responses attributable to the SUT are observable.
                if e.from() != sut && e.from() != WILDCARD {
                    continue;
                }
                let outcome = if id == on_path {
                    match tc.verdict_of(&step.target) {
                        Some(Verdict::Pass) => MatchOutcome::Pass,
                        Some(Verdict::Fail) => MatchOutcome::Fail,
                        Some(Verdict::Inc) => MatchOutcome::Inc,
                        None => MatchOutcome::Continue,
                    }
                } else {
                    match tc.verdict_of(&step.target) {
                        Some(Verdict::Pass) => MatchOutcome::Pass,
                        Some(Verdict::Fail) => MatchOutcome::Fail,
                        // Off-path subtrees are not executed by this plan; a
                        // diverging observation is inconclusive.
                        _ => MatchOutcome::Inc,
                    }
                };
                matchers.push(matcher_of(e, outcome));
            }
            // Observed requests toward other components carry no driver
            // matcher.
            Some(_) => {}
        }
    }

    // Most specific first, stable; then drop matchers whose constraints are
    // already covered so each observation maps to exactly one outcome.
    matchers.sort_by_key(|m| std::cmp::Reverse(m.specificity()));
    let mut deduped: Vec<ResponseMatcher> = Vec::new();
    for m in matchers {
        let duplicate = deduped.iter().any(|p| {
            p.status == m.status
                && p.body_equals == m.body_equals
                && p.body_contains == m.body_contains
                && p.body_not_contains == m.body_not_contains
                && p.not_crash == m.not_crash
                && p.transport_rejected == m.transport_rejected
        });
        if !duplicate {
            deduped.push(m);
        }
    }
    if !deduped.last().is_some_and(|m| m.is_catch_all()) {
        return Err(ConcretizeError::NoCatchAll);
    }
    Ok(ExpectAction {
        matchers: deduped,
        quiescence: quiescence.unwrap_or(Verdict::Inc),
    })
}

fn matcher_of(e: &Event, outcome: MatchOutcome) -> ResponseMatcher {
    ResponseMatcher {
        status: e.params.status.clone(),
        body_equals: e
            .params
            .body
            .clone()
            .filter(|b| b != WILDCARD && !b.is_empty()),
        body_contains: e.params.extra.get(params::BODY_CONTAINS).cloned(),
        body_not_contains: e.params.extra.get(params::BODY_NOT_CONTAINS).cloned(),
        not_crash: e.params.extra.get(params::NOT_CRASH).map(String::as_str) == Some("true"),
        transport_rejected: e.params.extra.get(params::TRANSPORT_REJECTED).map(String::as_str) == Some("true"),
        outcome,
    }
}

fn build_mock_rules(tc: &TestCase, seq: &[StepId]) -> Result<Vec<MockRule>, ConcretizeError> {
    let sut = tc.sut_id.as_str();
    let mut rules: Vec<MockRule> = Vec::new();
    let mut shutdown_seen = false;

    for (pos, &step_id) in seq.iter().enumerate() {
        let step = &tc.steps[step_id];
        let Some(event) = &step.event else { continue };
        if !step.has_label(labels::MOCK) || !event.is_response() || event.to() != sut {
            continue;
        }

        // Nearest preceding request addressed to this dependee provides the
        // matcher; a mock response without one matches anything.
        let request = seq[..pos]
            .iter()
            .rev()
            .map(|&id| &tc.steps[id])
            .filter_map(|s| s.event.as_ref())
            .find(|e| e.is_request() && e.to() == event.from());

        let (method, path, headers, body_contains) = match request {
            Some(req) => (
                req.params.method.clone().unwrap_or_else(|| WILDCARD.into()),
                req.params
                    .path
                    .as_deref()
                    .map(|p| p.split('?').next().unwrap_or(p).to_string())
                    .unwrap_or_else(|| WILDCARD.into()),
                req.params.headers.clone(),
                req.params.body.clone().filter(|b| b != WILDCARD && !b.is_empty()),
            ),
            None => (WILDCARD.into(), WILDCARD.into(), Default::default(), None),
        };

        let status_str = event.params.status.as_deref().unwrap_or("200");
        let status: u16 = status_str
            .parse()
            .map_err(|_| ConcretizeError::BadStatus(status_str.to_string()))?;
        let shutdown_after = event.params.extra.get(params::SHUTDOWN_AFTER).map(String::as_str) == Some("true");
        let delay_ms = event
            .params
            .extra
            .get(params::DELAY_MS)
            .and_then(|v| v.parse().ok())
            .unwrap_or(0);

        let candidate = MockRule {
            method,
            path,
            headers,
            body_contains,
            status,
            response_headers: event.params.headers.clone(),
            body: event.body().to_string(),
            times: 1,
            delay_ms,
            exempt: shutdown_seen,
            shutdown_after,
        };
        match rules.iter_mut().find(|r| {
            r.same_shape(&candidate) && r.exempt == candidate.exempt && r.shutdown_after == candidate.shutdown_after
        }) {
            Some(existing) => existing.times += 1,
            None => rules.push(candidate),
        }
        if shutdown_after {
            shutdown_seen = true;
        }
    }
    Ok(rules)
}

/// Wildcard resolution: recorded log values by parameter name first, seeded
/// random values otherwise. One name resolves to one value per plan.
struct Resolver<'a> {
    bindings: &'a BTreeMap<String, String>,
    rng: ChaCha8Rng,
    resolved: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    fn new(bindings: &'a BTreeMap<String, String>, seed: u64, mutant_id: &str) -> Self {
        let mut mix = seed;
        for b in mutant_id.bytes() {
            mix = mix.wrapping_mul(0x0000_0100_0000_01b3).wrapping_add(b as u64);
        }
        Resolver {
            bindings,
            rng: ChaCha8Rng::seed_from_u64(mix),
            resolved: BTreeMap::new(),
        }
    }

    fn resolve_event(&mut self, e: &mut Event) {
        if e.params.method.as_deref() == Some(WILDCARD) {
            e.params.method = Some(self.value_for("method", Some("GET")));
        }
        if e.params.path.as_deref() == Some(WILDCARD) {
            let v = self.value_for("path", None);
            e.params.path = Some(if v.starts_with('/') { v } else { format!("/{v}") });
        }
        if e.params.status.as_deref() == Some(WILDCARD) {
            e.params.status = Some(self.value_for("status", Some("200")));
        }
        if e.params.body.as_deref() == Some(WILDCARD) {
            e.params.body = Some(self.value_for("body", None));
        }
        let header_names: Vec<String> = e
            .params
            .headers
            .iter()
            .filter(|(_, v)| *v == WILDCARD)
            .map(|(n, _)| n.to_string())
            .collect();
        for name in header_names {
            let v = self.value_for(&name, None);
            e.params.headers.set(&name, v);
        }
        let cookie_names: Vec<String> = e
            .params
            .cookies
            .iter()
            .filter(|(_, v)| *v == WILDCARD)
            .map(|(n, _)| n.clone())
            .collect();
        for name in cookie_names {
            let v = self.value_for(&name, None);
            e.params.cookies.insert(name, v);
        }
    }

    fn value_for(&mut self, name: &str, fallback: Option<&str>) -> String {
        if let Some(v) = self.resolved.get(name) {
            return v.clone();
        }
        let value = self
            .bindings
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.clone())
            .or_else(|| fallback.map(String::from))
            .unwrap_or_else(|| self.random_value(name));
        self.resolved.insert(name.to_string(), value.clone());
        value
    }

    fn random_value(&mut self, name: &str) -> String {
        let lower = name.to_ascii_lowercase();
        let numeric = ["id", "num", "count", "port", "size", "acc", "amount"]
            .iter()
            .any(|hint| lower.contains(hint));
        if numeric {
            return self.rng.random_range(0u32..1_000_000).to_string();
        }
        const CHARSET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
        (0..8)
            .map(|_| CHARSET[self.rng.random_range(0..CHARSET.len())] as char)
            .collect()
    }
}
