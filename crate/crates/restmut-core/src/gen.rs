//! Seeded random test-case generator for property suites and benchmarks.
//!
//! Generated test cases are structurally valid by construction (the property
//! suites re-check that) and exercise the full event vocabulary: driver
//! requests with headers, cookies and bodies, service responses, dependee
//! exchanges labeled `mock`, token handling and crash responses. With
//! `allow_incomplete` the generator may leave non-verdict leaves open, which
//! is still valid but lacks completion steps.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::event::{Direction, Event, EventParams, Headers};
use crate::testcase::{labels, StateId, TestCase, TestStep};

pub const CLIENT: &str = "client";
pub const SUT: &str = "svc";
pub const DEPENDEES: [&str; 2] = ["billing", "risk"];

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Upper bound on the number of steps (verdict branches included).
    pub max_steps: usize,
    /// Leave some non-verdict leaves without any outgoing step.
    pub allow_incomplete: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_steps: 20,
            allow_incomplete: false,
        }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One random test case. Deterministic given the RNG state and config.
pub fn random_test_case(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> TestCase {
    let mut g = Generator {
        tc: TestCase::skeleton(SUT, "q0"),
        next_state: 1,
        issued_tokens: Vec::new(),
        rng,
    };
    let budget = cfg.max_steps.max(2);
    let mut open = vec!["q0".to_string()];

    while let Some(state) = open.pop() {
        // Keep room for one closing step per remaining open leaf.
        let room = budget.saturating_sub(g.tc.steps.len() + open.len() + 1);
        if room < 2 {
            g.close(&state, cfg);
            continue;
        }
        match g.rng.random_range(0..10u8) {
            0..=4 => {
                let next = g.exchange_with_sut(&state, room, &mut open);
                open.push(next);
            }
            5..=7 => {
                let next = g.dependee_exchange(&state);
                open.push(next);
            }
            _ => g.close(&state, cfg),
        }
    }
    g.tc
}

/// Shorthand for a corpus of `n` cases from one seed.
pub fn corpus(seed: u64, n: usize, cfg: &GenConfig) -> Vec<TestCase> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| random_test_case(&mut rng, cfg)).collect()
}

struct Generator<'a> {
    tc: TestCase,
    next_state: usize,
    issued_tokens: Vec<String>,
    rng: &'a mut ChaCha8Rng,
}

impl Generator<'_> {
    fn fresh(&mut self) -> StateId {
        let id = format!("q{}", self.next_state);
        self.next_state += 1;
        self.tc.states.push(id.clone());
        id
    }

    fn push(&mut self, source: &str, event: Option<Event>, step_labels: &[&str], target: &str) {
        self.tc.steps.push(TestStep {
            source: source.to_string(),
            event,
            labels: step_labels.iter().map(|l| l.to_string()).collect::<BTreeSet<_>>(),
            target: target.to_string(),
        });
    }

    fn random_path(&mut self) -> String {
        const PATHS: [&str; 6] = ["/orders", "/items", "/login", "/report", "/accounts", "/health"];
        PATHS[self.rng.random_range(0..PATHS.len())].to_string()
    }

    fn request_event(&mut self, from: &str, to: &str, path: &str) -> (Event, Vec<&'static str>) {
        const METHODS: [&str; 4] = ["GET", "POST", "PUT", "DELETE"];
        let mut headers = Headers::new();
        let mut step_labels: Vec<&'static str> = Vec::new();
        if !self.issued_tokens.is_empty() && self.rng.random_bool(0.5) {
            let tok = self.issued_tokens[self.rng.random_range(0..self.issued_tokens.len())].clone();
            headers.push("token", tok);
            step_labels.push(labels::TOKEN);
        }
        if path.contains("login") {
            step_labels.push(labels::LOGIN);
        }
        let mut cookies = std::collections::BTreeMap::new();
        if self.rng.random_bool(0.3) {
            cookies.insert("session".to_string(), format!("s{}", self.rng.random_range(0..100u32)));
        }
        let body = if self.rng.random_bool(0.5) {
            Some(format!("{{\"n\":{}}}", self.rng.random_range(0..1000u32)))
        } else {
            None
        };
        let event = Event {
            label: path.to_string(),
            direction: Direction::Input,
            params: EventParams {
                from: from.to_string(),
                to: to.to_string(),
                method: Some(METHODS[self.rng.random_range(0..METHODS.len())].to_string()),
                path: Some(path.to_string()),
                body,
                headers,
                cookies,
                ..Default::default()
            },
        };
        (event, step_labels)
    }

    fn response_event(&mut self, from: &str, to: &str, status: u16) -> (Event, Vec<&'static str>) {
        let mut headers = Headers::new();
        let mut step_labels: Vec<&'static str> = Vec::new();
        if status == 500 {
            step_labels.push(labels::CRASH);
        }
        if status < 300 && self.rng.random_bool(0.25) {
            let tok = format!("tok{}", self.rng.random_range(0..10_000u32));
            headers.push("token", tok.clone());
            self.issued_tokens.push(tok);
            step_labels.push(labels::TOKEN_CREATION);
        }
        let label = if status < 400 { "/ok" } else { "/error" };
        let event = Event {
            label: label.to_string(),
            direction: Direction::Output,
            params: EventParams {
                from: from.to_string(),
                to: to.to_string(),
                status: Some(status.to_string()),
                body: if self.rng.random_bool(0.4) { Some("done".to_string()) } else { None },
                headers,
                ..Default::default()
            },
        };
        (event, step_labels)
    }

    /// Driver request to the SUT followed by the SUT response; may branch
    /// with an extra response going straight to a verdict.
    fn exchange_with_sut(&mut self, state: &str, room: usize, _open: &mut Vec<StateId>) -> StateId {
        let path = self.random_path();
        let (req, req_labels) = self.request_event(CLIENT, SUT, &path);
        let mid = self.fresh();
        self.push(state, Some(req), &req_labels, &mid);

        let statuses: [u16; 5] = [200, 201, 401, 404, 500];
        let status = statuses[self.rng.random_range(0..statuses.len())];
        let (resp, resp_labels) = self.response_event(SUT, CLIENT, status);
        let next = self.fresh();
        self.push(&mid, Some(resp), &resp_labels, &next);

        // Occasionally a sibling response observation that ends in a verdict.
        if room >= 3 && self.rng.random_bool(0.3) {
            let alt_status = if status == 500 { 200 } else { 500 };
            let (alt, alt_labels) = self.response_event(SUT, CLIENT, alt_status);
            let verdict = if alt_status == 500 { "fail" } else { "pass" };
            self.push(&mid, Some(alt), &alt_labels, verdict);
        }
        next
    }

    /// SUT calls a dependee, the (future) mock answers. Both steps are
    /// labeled `mock`.
    fn dependee_exchange(&mut self, state: &str) -> StateId {
        let dep = DEPENDEES[self.rng.random_range(0..DEPENDEES.len())];
        let path = self.random_path();
        let (mut req, _) = self.request_event(SUT, dep, &path);
        req.direction = Direction::Output;
        let mid = self.fresh();
        self.push(state, Some(req), &[labels::MOCK], &mid);

        let (resp, mut resp_labels) = self.response_event(dep, SUT, 200);
        resp_labels.push(labels::MOCK);
        // Mock responses carrying an issued token are token steps too.
        if resp.header("token").is_some() {
            resp_labels.push(labels::TOKEN);
        }
        let next = self.fresh();
        self.push(&mid, Some(resp), &resp_labels, &next);
        next
    }

    /// Ends a leaf: a verdict-entering observation, θ to fail, or (when
    /// incomplete cases are allowed) nothing at all.
    fn close(&mut self, state: &str, cfg: &GenConfig) {
        if cfg.allow_incomplete && self.rng.random_bool(0.4) {
            return;
        }
        match self.rng.random_range(0..6u8) {
            0 => self.push(state, None, &[], "fail"),
            1 => {
                let (resp, resp_labels) = self.response_event(SUT, CLIENT, 500);
                self.push(state, Some(resp), &resp_labels, "fail");
            }
            _ => {
                let (resp, resp_labels) = self.response_event(SUT, CLIENT, 200);
                self.push(state, Some(resp), &resp_labels, "pass");
            }
        }
    }
}
