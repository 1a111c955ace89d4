//! Structural validation of test cases.
//!
//! Violations are data, not errors: `validate` always returns a report with
//! one entry per violated clause, naming the offending state or step. An
//! empty report means the test case is valid.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::testcase::{labels, StateId, TestCase};

/// The structural clause a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// A state or verdict id is referenced but not declared.
    StateRefs,
    /// Two outgoing steps of one state carry the same event.
    Deterministic,
    /// Cycle outside verdict states, reconverging branches, or unreachable
    /// states.
    TreeShaped,
    /// More than one input event at a state, or quiescence next to an input.
    InputRestricted,
    /// More than one mock-labeled response step at a state.
    MockResponseRestricted,
    /// A verdict state has an outgoing step other than a θ self-loop.
    VerdictTerminal,
    /// A step entering a verdict state carries an input event.
    VerdictEntry,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Clause::StateRefs => "state references",
            Clause::Deterministic => "deterministic",
            Clause::TreeShaped => "tree shaped",
            Clause::InputRestricted => "input restricted",
            Clause::MockResponseRestricted => "mock response restricted",
            Clause::VerdictTerminal => "verdict terminal",
            Clause::VerdictEntry => "verdict entry",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub clause: Clause,
    pub state: Option<StateId>,
    pub step: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.clause, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, clause: Clause) -> bool {
        self.violations.iter().any(|v| v.clause == clause)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural clause independently and reports all violations.
/// Pure: same input, same report.
pub fn validate(tc: &TestCase) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_state_refs(tc, &mut report);
    check_deterministic(tc, &mut report);
    check_tree_shape(tc, &mut report);
    check_input_restricted(tc, &mut report);
    check_mock_response_restricted(tc, &mut report);
    check_verdict_terminal(tc, &mut report);
    check_verdict_entry(tc, &mut report);
    report
}

fn push(report: &mut ValidationReport, clause: Clause, state: Option<&str>, step: Option<usize>, detail: String) {
    report.violations.push(Violation {
        clause,
        state: state.map(|s| s.to_string()),
        step,
        detail,
    });
}

fn check_state_refs(tc: &TestCase, report: &mut ValidationReport) {
    let mut missing = BTreeSet::new();
    if !tc.contains_state(&tc.initial) {
        missing.insert(tc.initial.clone());
    }
    for v in [&tc.verdicts.pass, &tc.verdicts.fail, &tc.verdicts.inc] {
        if !tc.contains_state(v) {
            missing.insert(v.clone());
        }
    }
    for step in &tc.steps {
        for s in [&step.source, &step.target] {
            if !tc.contains_state(s) {
                missing.insert(s.clone());
            }
        }
    }
    for state in missing {
        push(report, Clause::StateRefs, Some(&state), None, format!("state \"{state}\" is referenced but not declared"));
    }
}

fn check_deterministic(tc: &TestCase, report: &mut ValidationReport) {
    for state in &tc.states {
        let outgoing: Vec<_> = tc.outgoing(state).collect();
        for (i, (id_a, a)) in outgoing.iter().enumerate() {
            for (id_b, b) in outgoing.iter().skip(i + 1) {
                if a.event == b.event {
                    push(
                        report,
                        Clause::Deterministic,
                        Some(state),
                        Some(*id_b),
                        format!("state {state} has two outgoing steps with the same event ({} and {})", a.rendered(), b.rendered()),
                    );
                    let _ = id_a;
                }
            }
        }
    }
}

fn check_tree_shape(tc: &TestCase, report: &mut ValidationReport) {
    // Verdict θ self-loops are the only permitted cycles; ignore them here.
    let real_steps: Vec<_> = tc
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| !(s.source == s.target && tc.is_verdict_state(&s.source)))
        .collect();

    let mut indegree: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, step) in &real_steps {
        *indegree.entry(step.target.as_str()).or_default() += 1;
    }
    for state in &tc.states {
        if tc.is_verdict_state(state) {
            continue; // verdicts are shared sinks
        }
        let deg = indegree.get(state.as_str()).copied().unwrap_or(0);
        if state == &tc.initial && deg > 0 {
            push(report, Clause::TreeShaped, Some(state), None, format!("initial state {state} has incoming steps"));
        } else if state != &tc.initial && deg > 1 {
            push(report, Clause::TreeShaped, Some(state), None, format!("state {state} has {deg} incoming steps"));
        }
    }

    // Reachability from the initial state; verdict states may legitimately be
    // unreferenced sinks.
    let mut reached: BTreeSet<&str> = BTreeSet::new();
    let mut stack = vec![tc.initial.as_str()];
    while let Some(state) = stack.pop() {
        if !reached.insert(state) {
            continue;
        }
        for (_, step) in &real_steps {
            if step.source == state {
                stack.push(step.target.as_str());
            }
        }
    }
    for state in &tc.states {
        if !reached.contains(state.as_str()) && !tc.is_verdict_state(state) {
            push(report, Clause::TreeShaped, Some(state), None, format!("state {state} is unreachable from {}", tc.initial));
        }
    }

    // Cycle detection over non-self-loop steps (a cycle through reconverging
    // states is possible even with the indegree check when ids dangle).
    let mut visiting: BTreeSet<&str> = BTreeSet::new();
    let mut done: BTreeSet<&str> = BTreeSet::new();
    fn dfs<'a>(
        state: &'a str,
        steps: &[(usize, &'a crate::testcase::TestStep)],
        visiting: &mut BTreeSet<&'a str>,
        done: &mut BTreeSet<&'a str>,
    ) -> Option<String> {
        if done.contains(state) {
            return None;
        }
        if !visiting.insert(state) {
            return Some(state.to_string());
        }
        for (_, step) in steps {
            if step.source == state {
                if let Some(cycle) = dfs(&step.target, steps, visiting, done) {
                    return Some(cycle);
                }
            }
        }
        visiting.remove(state);
        done.insert(state);
        None
    }
    if let Some(state) = dfs(&tc.initial, &real_steps, &mut visiting, &mut done) {
        push(report, Clause::TreeShaped, Some(&state), None, format!("cycle through non-verdict state {state}"));
    }
}

fn check_input_restricted(tc: &TestCase, report: &mut ValidationReport) {
    for state in &tc.states {
        let mut inputs = 0usize;
        let mut has_theta = false;
        for (_, step) in tc.outgoing(state) {
            match &step.event {
                None => has_theta = true,
                Some(e) if e.direction == crate::event::Direction::Input => inputs += 1,
                Some(_) => {}
            }
        }
        if inputs > 1 {
            push(report, Clause::InputRestricted, Some(state), None, format!("state {state} has {inputs} outgoing input steps"));
        }
        if has_theta && inputs > 0 {
            push(report, Clause::InputRestricted, Some(state), None, format!("state {state} mixes quiescence with an input step"));
        }
    }
}

fn check_mock_response_restricted(tc: &TestCase, report: &mut ValidationReport) {
    for state in &tc.states {
        let mock_responses = tc
            .outgoing(state)
            .filter(|(_, s)| {
                s.has_label(labels::MOCK)
                    && s.event.as_ref().is_some_and(|e| e.is_response())
            })
            .count();
        if mock_responses > 1 {
            push(
                report,
                Clause::MockResponseRestricted,
                Some(state),
                None,
                format!("state {state} has {mock_responses} outgoing mock-labeled response steps"),
            );
        }
    }
}

fn check_verdict_terminal(tc: &TestCase, report: &mut ValidationReport) {
    for state in &tc.states {
        if !tc.is_verdict_state(state) {
            continue;
        }
        for (id, step) in tc.outgoing(state) {
            if step.target != *state || !step.is_quiescence() {
                push(
                    report,
                    Clause::VerdictTerminal,
                    Some(state),
                    Some(id),
                    format!("verdict state {state} has outgoing step {}", step.rendered()),
                );
            }
        }
    }
}

fn check_verdict_entry(tc: &TestCase, report: &mut ValidationReport) {
    for (id, step) in tc.steps.iter().enumerate() {
        if !tc.is_verdict_state(&step.target) || step.source == step.target {
            continue;
        }
        if let Some(event) = &step.event {
            if event.direction == crate::event::Direction::Input {
                push(
                    report,
                    Clause::VerdictEntry,
                    Some(&step.target),
                    Some(id),
                    format!("step {} enters a verdict state with an input event", step.rendered()),
                );
            }
        }
    }
}
