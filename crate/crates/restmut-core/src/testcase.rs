use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::event::Event;

/// States are referenced by name; `pass`, `fail` and `inc` are ordinary state
/// ids singled out by [`VerdictStates`].
pub type StateId = String;

/// Steps are referenced by their index in [`TestCase::steps`], which is also
/// their order in the serialized document.
pub type StepId = usize;

/// Well-known step labels.
pub mod labels {
    /// Event performed by (or addressed to) a dependee service that must be
    /// replaced by a mock component.
    pub const MOCK: &str = "mock";
    /// Authentication request.
    pub const LOGIN: &str = "login";
    /// Event carrying a previously issued token value.
    pub const TOKEN: &str = "token";
    /// Response that introduces a token value.
    pub const TOKEN_CREATION: &str = "token creation";
    /// HTTP 500 (or transport reset) observed.
    pub const CRASH: &str = "crash";
    /// Marks the one step a mutation operator is about to transform.
    pub const MUTATION: &str = "mutation";
}

/// Test verdicts. The ordering is for reporting only: a run reaching `fail`
/// dominates, so `pass < inc < fail`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Inc,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inc => "inc",
            Verdict::Fail => "fail",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The three verdict sink states of a test case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictStates {
    pub pass: StateId,
    pub fail: StateId,
    pub inc: StateId,
}

impl VerdictStates {
    pub fn of(&self, state: &str) -> Option<Verdict> {
        if state == self.pass {
            Some(Verdict::Pass)
        } else if state == self.fail {
            Some(Verdict::Fail)
        } else if state == self.inc {
            Some(Verdict::Inc)
        } else {
            None
        }
    }

    pub fn state_id(&self, verdict: Verdict) -> &StateId {
        match verdict {
            Verdict::Pass => &self.pass,
            Verdict::Fail => &self.fail,
            Verdict::Inc => &self.inc,
        }
    }
}

/// One transition: source state, event (or `None` for the quiescence marker
/// θ, the observable absence of any reaction), a duplicate-free label set,
/// and target state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestStep {
    #[serde(rename = "from")]
    pub source: StateId,
    pub event: Option<Event>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub labels: BTreeSet<String>,
    #[serde(rename = "to")]
    pub target: StateId,
}

impl TestStep {
    pub fn is_quiescence(&self) -> bool {
        self.event.is_none()
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    /// Diagnostic rendering: `q1 -?/login-> q2` or `q1 -θ-> fail`.
    pub fn rendered(&self) -> String {
        let ev = match &self.event {
            Some(e) => e.rendered(),
            None => "θ".to_string(),
        };
        format!("{} -{}-> {}", self.source, ev, self.target)
    }
}

/// A deterministic, tree-shaped test case with verdict leaf states. Values
/// are immutable after construction; every operation that "modifies" a test
/// case returns a new one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    /// Component id of the service under test.
    pub sut_id: String,
    pub initial: StateId,
    pub states: Vec<StateId>,
    pub verdicts: VerdictStates,
    pub steps: Vec<TestStep>,
}

impl TestCase {
    /// Empty skeleton: initial state plus the three verdict states, no steps.
    pub fn skeleton(sut_id: impl Into<String>, initial: impl Into<String>) -> Self {
        let initial = initial.into();
        TestCase {
            sut_id: sut_id.into(),
            initial: initial.clone(),
            states: vec![initial, "pass".into(), "fail".into(), "inc".into()],
            verdicts: VerdictStates {
                pass: "pass".into(),
                fail: "fail".into(),
                inc: "inc".into(),
            },
            steps: Vec::new(),
        }
    }

    pub fn contains_state(&self, state: &str) -> bool {
        self.states.iter().any(|s| s == state)
    }

    pub fn verdict_of(&self, state: &str) -> Option<Verdict> {
        self.verdicts.of(state)
    }

    pub fn is_verdict_state(&self, state: &str) -> bool {
        self.verdict_of(state).is_some()
    }

    /// Outgoing steps of `state`, in step-id order.
    pub fn outgoing<'a, 'b>(&'a self, state: &'b str) -> impl Iterator<Item = (StepId, &'a TestStep)> + use<'a, 'b> {
        self.steps
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.source == state)
    }

    /// Incoming steps of `state`, in step-id order.
    pub fn incoming<'a, 'b>(&'a self, state: &'b str) -> impl Iterator<Item = (StepId, &'a TestStep)> + use<'a, 'b> {
        self.steps
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.target == state)
    }

    /// Allocates a state id not present in the test case, adds it to the
    /// state set and returns it. Used by mutation operators that need to
    /// splice in states.
    pub fn add_fresh_state(&mut self, hint: &str) -> StateId {
        let mut n = 0usize;
        loop {
            let candidate = format!("{hint}{n}");
            if !self.contains_state(&candidate) {
                self.states.push(candidate.clone());
                return candidate;
            }
            n += 1;
        }
    }
}
