//! The embedded mock server: rule matching, exact call counting, shutdown
//! semantics and post-run verification.

use std::sync::{Arc, Mutex};

use restmut_core::WILDCARD;
use serde::{Deserialize, Serialize};

use crate::httpd::{handler, Reply, Request, Response, Server};
use crate::plan::MockRule;

#[derive(Debug, Default)]
struct MockState {
    rules: Vec<MockRule>,
    counts: Vec<u32>,
    unmatched: Vec<String>,
    down: bool,
}

/// Stands in for every dependee service of the SUT. One listener serves the
/// whole run; rules, counters and the shutdown flag are installed per plan.
pub struct MockServer {
    server: Server,
    state: Arc<Mutex<MockState>>,
}

impl MockServer {
    pub async fn start(port: u16) -> std::io::Result<MockServer> {
        let state = Arc::new(Mutex::new(MockState::default()));
        let shared = state.clone();
        let server = Server::bind(
            port,
            handler(move |req| {
                let state = shared.clone();
                async move {
                    let (reply, delay_ms) = serve(&state, req);
                    if delay_ms > 0 {
                        tokio::time::sleep(std::time::Duration::from_millis(delay_ms)).await;
                    }
                    reply
                }
            }),
        )
        .await?;
        Ok(MockServer { server, state })
    }

    pub fn url(&self) -> String {
        self.server.url()
    }

    /// Installs a plan's rules, resetting counters and the shutdown flag.
    pub fn install(&self, rules: &[MockRule]) {
        let mut state = self.state.lock().unwrap();
        state.counts = vec![0; rules.len()];
        state.rules = rules.to_vec();
        state.unmatched.clear();
        state.down = false;
    }

    /// Compares observed call counts against the prescribed ones.
    pub fn verification(&self) -> MockVerification {
        let state = self.state.lock().unwrap();
        let mut mismatches = Vec::new();
        for (i, rule) in state.rules.iter().enumerate() {
            if rule.exempt {
                continue;
            }
            let observed = state.counts[i];
            if observed != rule.times {
                mismatches.push(MockMismatch {
                    rule: rule.describe(),
                    expected: rule.times,
                    observed,
                });
            }
        }
        MockVerification {
            ok: mismatches.is_empty() && state.unmatched.is_empty(),
            mismatches,
            unmatched: state.unmatched.clone(),
        }
    }
}

fn serve(state: &Mutex<MockState>, req: Request) -> (Reply, u64) {
    let mut state = state.lock().unwrap();
    if state.down {
        return (Reply::Abort, 0);
    }
    let matched = state
        .rules
        .iter()
        .enumerate()
        .position(|(i, rule)| state.counts[i] < rule.times.max(1) && rule_matches(rule, &req));
    match matched {
        Some(i) => {
            state.counts[i] += 1;
            let rule = state.rules[i].clone();
            let mut response = Response::new(rule.status, rule.body.into_bytes());
            for (name, value) in rule.response_headers.iter() {
                response = response.with_header(name, value);
            }
            if rule.shutdown_after && state.counts[i] >= rule.times {
                state.down = true;
            }
            (Reply::Respond(response), rule.delay_ms)
        }
        None => {
            state.unmatched.push(format!("{} {}", req.method, req.path));
            (Reply::Respond(Response::new(404, b"no mock rule matched".to_vec())), 0)
        }
    }
}

fn rule_matches(rule: &MockRule, req: &Request) -> bool {
    if rule.method != WILDCARD && !rule.method.eq_ignore_ascii_case(&req.method) {
        return false;
    }
    if rule.path != WILDCARD && rule.path != req.path_without_query() {
        return false;
    }
    for (name, value) in rule.headers.iter() {
        match req.header(name) {
            Some(observed) if value == WILDCARD || observed == value => {}
            _ => return false,
        }
    }
    if let Some(needle) = &rule.body_contains {
        if !req.body_text().contains(needle.as_str()) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MockMismatch {
    pub rule: String,
    pub expected: u32,
    pub observed: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MockVerification {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mismatches: Vec<MockMismatch>,
    /// Requests that matched no rule.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmatched: Vec<String>,
}

impl MockVerification {
    pub fn trivially_ok() -> Self {
        MockVerification {
            ok: true,
            mismatches: Vec::new(),
            unmatched: Vec::new(),
        }
    }
}
