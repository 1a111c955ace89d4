//! Completion of test cases: wildcard observations to `inc`, quiescence to
//! `fail`.

use std::collections::BTreeSet;

use restmut_core::{Direction, Event, EventParams, TestCase, TestStep, WILDCARD};

/// The bare wildcard-output event added by completion: any output, from
/// anyone, any status.
pub fn catchall_event() -> Event {
    Event {
        label: WILDCARD.into(),
        direction: Direction::Output,
        params: EventParams {
            from: WILDCARD.into(),
            to: WILDCARD.into(),
            status: Some(WILDCARD.into()),
            ..Default::default()
        },
    }
}

/// Completes a test case so that every possible observation maps to a
/// verdict. Three rules: all original steps are kept; every non-verdict state
/// without a bare wildcard-output step gains one leading to `inc` (any
/// unexpected output is inconclusive); afterwards, every state whose outgoing
/// steps are all outputs — no input, no quiescence — gains a θ step to `fail`
/// (the absence of reaction is faulty).
pub fn compl(mut tc: TestCase) -> TestCase {
    let catchall = catchall_event();
    let states: Vec<String> = tc
        .states
        .iter()
        .filter(|s| !tc.is_verdict_state(s))
        .cloned()
        .collect();

    let inc = tc.verdicts.inc.clone();
    for state in &states {
        let has_catchall = tc
            .outgoing(state)
            .any(|(_, s)| s.labels.is_empty() && s.event.as_ref() == Some(&catchall));
        if !has_catchall {
            tc.steps.push(TestStep {
                source: state.clone(),
                event: Some(catchall.clone()),
                labels: BTreeSet::new(),
                target: inc.clone(),
            });
        }
    }

    let fail = tc.verdicts.fail.clone();
    for state in &states {
        let mut has_input = false;
        let mut has_theta = false;
        let mut has_output = false;
        for (_, s) in tc.outgoing(state) {
            match &s.event {
                None => has_theta = true,
                Some(e) if e.direction == Direction::Input => has_input = true,
                Some(_) => has_output = true,
            }
        }
        if has_output && !has_input && !has_theta {
            tc.steps.push(TestStep {
                source: state.clone(),
                event: None,
                labels: BTreeSet::new(),
                target: fail.clone(),
            });
        }
    }
    tc
}

/// True when every maximal path ends in a verdict state, i.e. every
/// reachable non-verdict state has at least one outgoing step.
pub fn is_completed(tc: &TestCase) -> bool {
    tc.states
        .iter()
        .filter(|s| !tc.is_verdict_state(s))
        .all(|s| tc.outgoing(s).next().is_some())
}
