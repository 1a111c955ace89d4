//! Traversal helpers: outgoing event sets and pass-ending test sequences.

use thiserror::Error;

use crate::event::{Event, EventKey};
use crate::testcase::{StepId, TestCase, TestStep, Verdict};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown state id \"{0}\"")]
pub struct UnknownState(pub String);

/// Ordering key for a step: events ordered by their canonical key, θ last,
/// ties broken by target state. Gives traversal a reproducible order without
/// relying on document order.
pub fn step_order_key(step: &TestStep) -> (u8, Option<EventKey>, String) {
    match &step.event {
        Some(e) => (0, Some(e.key()), step.target.clone()),
        None => (1, None, step.target.clone()),
    }
}

/// The event set of a state: one entry per outgoing step, `None` standing for
/// θ. Ordered canonically.
pub fn events_at<'a>(tc: &'a TestCase, state: &str) -> Result<Vec<Option<&'a Event>>, UnknownState> {
    if !tc.contains_state(state) {
        return Err(UnknownState(state.to_string()));
    }
    let mut steps: Vec<&TestStep> = tc.outgoing(state).map(|(_, s)| s).collect();
    steps.sort_by_key(|s| step_order_key(s));
    Ok(steps.into_iter().map(|s| s.event.as_ref()).collect())
}

/// All test sequences from the initial state whose last step targets `pass`,
/// depth-first with steps in canonical order. Verdict self-loops are never
/// followed. Empty when no pass path exists.
pub fn pass_sequences(tc: &TestCase) -> Vec<Vec<StepId>> {
    let mut sequences = Vec::new();
    let mut path: Vec<StepId> = Vec::new();
    walk(tc, &tc.initial, &mut path, &mut sequences);
    sequences
}

fn walk(tc: &TestCase, state: &str, path: &mut Vec<StepId>, out: &mut Vec<Vec<StepId>>) {
    if let Some(verdict) = tc.verdict_of(state) {
        if verdict == Verdict::Pass && !path.is_empty() {
            out.push(path.clone());
        }
        return;
    }
    let mut children: Vec<(StepId, &TestStep)> = tc.outgoing(state).collect();
    children.sort_by(|(_, a), (_, b)| step_order_key(a).cmp(&step_order_key(b)));
    for (id, step) in children {
        path.push(id);
        walk(tc, &step.target, path, out);
        path.pop();
    }
}

/// The unique path of step ids from the initial state to `step` (inclusive),
/// or `None` if the step is unreachable. Relies on the tree shape.
pub fn path_to_step(tc: &TestCase, step: StepId) -> Option<Vec<StepId>> {
    let mut path = vec![step];
    let mut current = tc.steps.get(step)?.source.as_str();
    while current != tc.initial {
        let (parent_id, parent) = tc
            .incoming(current)
            .find(|(_, s)| s.source != s.target)?;
        path.push(parent_id);
        current = parent.source.as_str();
    }
    path.reverse();
    Some(path)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::event::{Direction, EventParams};
    use crate::testcase::TestCase;

    fn ev(label: &str, dir: Direction, to_sut: bool) -> Event {
        let (from, to) = if to_sut { ("C", "S") } else { ("S", "C") };
        Event {
            label: label.into(),
            direction: dir,
            params: EventParams {
                from: from.into(),
                to: to.into(),
                method: if dir == Direction::Input { Some("GET".into()) } else { None },
                path: if dir == Direction::Input { Some(label.to_string()) } else { None },
                status: if dir == Direction::Output { Some("200".into()) } else { None },
                ..Default::default()
            },
        }
    }

    fn step(tc: &mut TestCase, from: &str, event: Option<Event>, to: &str) {
        if !tc.contains_state(from) {
            tc.states.push(from.into());
        }
        if !tc.contains_state(to) {
            tc.states.push(to.into());
        }
        tc.steps.push(TestStep {
            source: from.into(),
            event,
            labels: BTreeSet::new(),
            target: to.into(),
        });
    }

    #[test]
    fn events_at_unknown_state_errors() {
        let tc = TestCase::skeleton("S", "q0");
        assert_eq!(events_at(&tc, "q9"), Err(UnknownState("q9".into())));
    }

    #[test]
    fn events_at_verdict_without_self_loops_is_empty() {
        let tc = TestCase::skeleton("S", "q0");
        assert!(events_at(&tc, "pass").unwrap().is_empty());
    }

    #[test]
    fn events_at_lists_outputs_and_theta() {
        let mut tc = TestCase::skeleton("S", "q0");
        step(&mut tc, "q0", Some(ev("/a", Direction::Output, false)), "pass");
        step(&mut tc, "q0", Some(ev("/b", Direction::Output, false)), "inc");
        step(&mut tc, "q0", None, "fail");
        let events = events_at(&tc, "q0").unwrap();
        assert_eq!(events.len(), 3);
        assert_eq!(events[0].unwrap().label, "/a");
        assert_eq!(events[1].unwrap().label, "/b");
        assert!(events[2].is_none()); // θ sorts last
    }

    #[test]
    fn two_pass_leaves_yield_two_sequences() {
        // Binary tree of depth 2 with both leaves at pass; independently
        // enumerable by hand: exactly the left and right root-to-leaf paths.
        let mut tc = TestCase::skeleton("S", "q0");
        step(&mut tc, "q0", Some(ev("/req", Direction::Input, true)), "q1");
        let mut left = ev("/ok", Direction::Output, false);
        left.params.status = Some("200".into());
        let mut right = ev("/created", Direction::Output, false);
        right.params.status = Some("201".into());
        step(&mut tc, "q1", Some(left), "pass");
        step(&mut tc, "q1", Some(right), "pass");
        let seqs = pass_sequences(&tc);
        assert_eq!(seqs.len(), 2);
        // "/created" precedes "/ok" in the canonical event order.
        assert_eq!(seqs[0], vec![0, 2]);
        assert_eq!(seqs[1], vec![0, 1]);
    }

    #[test]
    fn fail_only_tree_has_no_pass_sequence() {
        let mut tc = TestCase::skeleton("S", "q0");
        step(&mut tc, "q0", Some(ev("/a", Direction::Output, false)), "fail");
        assert!(pass_sequences(&tc).is_empty());
    }

    #[test]
    fn path_to_step_walks_back_to_root() {
        let mut tc = TestCase::skeleton("S", "q0");
        step(&mut tc, "q0", Some(ev("/a", Direction::Input, true)), "q1");
        step(&mut tc, "q1", Some(ev("/b", Direction::Output, false)), "pass");
        assert_eq!(path_to_step(&tc, 1), Some(vec![0, 1]));
    }
}
