//! Plan execution: drives the SUT over HTTP, evaluates verdicts, verifies
//! mocks.

use std::time::{Duration, Instant};

use restmut_core::Verdict;

use crate::mock::{MockServer, MockVerification};
use crate::plan::{status_matches, DriverAction, ExpectAction, MatchOutcome, SendAction, TestPlan};
use crate::report::{ObservedEvent, SuiteReport, TestResult};

#[derive(Debug, Clone)]
pub struct ExecConfig {
    /// Silence longer than this is quiescence.
    pub quiescence_timeout_ms: u64,
    /// Mock listener port; 0 picks an ephemeral one.
    pub mock_port: u16,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            quiescence_timeout_ms: 5_000,
            mock_port: 0,
        }
    }
}

/// What one send attempt produced.
#[derive(Debug, Clone)]
pub enum Observation {
    Response { status: u16, body: String },
    /// Nothing within the quiescence timeout (θ).
    Quiescence,
    /// Connection-level failure: reset, refused mid-run, protocol error.
    Transport { detail: String },
}

impl Observation {
    fn is_crash(&self) -> bool {
        match self {
            Observation::Response { status, .. } => *status == 500,
            Observation::Transport { .. } => true,
            Observation::Quiescence => false,
        }
    }
}

pub fn http_client(cfg: &ExecConfig) -> reqwest::Client {
    reqwest::Client::builder()
        .timeout(Duration::from_millis(cfg.quiescence_timeout_ms))
        .redirect(reqwest::redirect::Policy::none())
        .build()
        .expect("client construction cannot fail")
}

/// Runs one plan against the SUT. The mock server must already carry the
/// plan's rules.
pub async fn run_plan(
    client: &reqwest::Client,
    plan: &TestPlan,
    sut_url: &str,
    mock: &MockServer,
) -> TestResult {
    mock.install(&plan.mock_rules);
    let started = Instant::now();
    let mut observed: Vec<ObservedEvent> = Vec::new();
    let mut crash_seen = false;
    let mut pending: Option<Observation> = None;
    let mut verdict: Option<Verdict> = None;
    let mut failure_reason: Option<String> = None;
    let mut environment = false;
    let mut first_send = true;

    'actions: for action in &plan.actions {
        match action {
            DriverAction::Send(send) => {
                if send.delay_ms > 0 {
                    tokio::time::sleep(Duration::from_millis(send.delay_ms)).await;
                }
                for attempt in 0..send.repeat.max(1) {
                    let obs = perform_send(client, send, sut_url).await;
                    observed.push(ObservedEvent::from_observation(&obs, started, &send.path));
                    crash_seen |= obs.is_crash();
                    if first_send {
                        first_send = false;
                        if let Observation::Transport { detail } = &obs {
                            if detail.contains("connect") {
                                verdict = Some(Verdict::Inc);
                                failure_reason = Some(format!("environment: {detail}"));
                                environment = true;
                                break 'actions;
                            }
                        }
                    }
                    let _ = attempt;
                    pending = Some(obs);
                }
            }
            DriverAction::Expect(expect) => {
                let obs = pending.take().unwrap_or(Observation::Quiescence);
                match evaluate(expect, &obs) {
                    Outcome::Verdict(v, why) => {
                        verdict = Some(v);
                        failure_reason = why;
                        break 'actions;
                    }
                    Outcome::Continue => {}
                }
            }
        }
    }

    let verdict = verdict.unwrap_or_else(|| {
        failure_reason = Some("plan exhausted without reaching a verdict".into());
        Verdict::Inc
    });

    // Verification runs even for plans without rules: a dependee call the
    // mutant does not model is a contract deviation too.
    let mock_verification = mock.verification();

    finish_result(plan, verdict, observed, crash_seen, mock_verification, failure_reason, environment, started)
}

#[allow(clippy::too_many_arguments)]
fn finish_result(
    plan: &TestPlan,
    mut verdict: Verdict,
    observed: Vec<ObservedEvent>,
    crash_seen: bool,
    mock_verification: MockVerification,
    mut failure_reason: Option<String>,
    environment: bool,
    started: Instant,
) -> TestResult {
    // A broken mock contract makes the run inconclusive unless it already
    // failed outright. Environment-aborted runs never exercised the mock.
    if !environment && !mock_verification.ok && verdict != Verdict::Fail {
        verdict = Verdict::Inc;
        failure_reason = Some("mock contract violated".into());
    }

    // Vulnerability warning: the service accepted the attack (success
    // response) or crashed, without the run passing.
    let last_success = observed
        .iter()
        .rev()
        .find_map(|o| o.status)
        .is_some_and(|s| (200..300).contains(&s));
    let vulnerability = verdict != Verdict::Pass && !environment && (last_success || crash_seen);
    let warning = if vulnerability {
        Some(if crash_seen {
            "crash observed while executing the mutated interaction".to_string()
        } else {
            "success response where a rejection was expected".to_string()
        })
    } else {
        None
    };

    TestResult {
        mutant_id: plan.mutant_id.clone(),
        operator: plan.operator.clone(),
        verdict,
        observed,
        mock: mock_verification,
        crash: crash_seen,
        vulnerability,
        warning,
        failure_reason,
        environment,
        duration_ms: started.elapsed().as_millis() as u64,
    }
}

async fn perform_send(client: &reqwest::Client, send: &SendAction, sut_url: &str) -> Observation {
    let base = if send.insecure && sut_url.starts_with("https://") {
        sut_url.replacen("https://", "http://", 1)
    } else {
        sut_url.to_string()
    };
    let url = format!("{}{}", base.trim_end_matches('/'), send.path);
    let method = match reqwest::Method::from_bytes(send.method.as_bytes()) {
        Ok(m) => m,
        Err(_) => {
            return Observation::Transport {
                detail: format!("invalid method {}", send.method),
            }
        }
    };

    let mut request = client.request(method, &url);
    for (name, value) in send.headers.iter() {
        request = request.header(name, value);
    }
    if !send.cookies.is_empty() {
        let cookie = send
            .cookies
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("; ");
        request = request.header("cookie", cookie);
    }
    if let Some(body) = &send.body {
        request = request.body(body.clone());
    }

    match request.send().await {
        Ok(response) => {
            let status = response.status().as_u16();
            match response.text().await {
                Ok(body) => Observation::Response { status, body },
                Err(e) => Observation::Transport { detail: format!("body read failed: {e}") },
            }
        }
        Err(e) if e.is_timeout() => Observation::Quiescence,
        Err(e) if e.is_connect() => Observation::Transport { detail: format!("connect: {e}") },
        Err(e) => Observation::Transport { detail: e.to_string() },
    }
}

enum Outcome {
    Verdict(Verdict, Option<String>),
    Continue,
}

fn evaluate(expect: &ExpectAction, obs: &Observation) -> Outcome {
    if matches!(obs, Observation::Quiescence) {
        return Outcome::Verdict(
            expect.quiescence,
            Some("no reaction within the quiescence timeout".into()),
        );
    }
    for matcher in &expect.matchers {
        if matcher_accepts(matcher, obs) {
            return match matcher.outcome {
                MatchOutcome::Continue => Outcome::Continue,
                other => {
                    let verdict = other.verdict().expect("non-continue outcome");
                    let why = (verdict != Verdict::Pass).then(|| describe(obs));
                    Outcome::Verdict(verdict, why)
                }
            };
        }
    }
    // The plan builder guarantees a total matcher; this is a defensive
    // fallback only.
    Outcome::Verdict(Verdict::Inc, Some(format!("unmatched observation: {}", describe(obs))))
}

fn matcher_accepts(matcher: &crate::plan::ResponseMatcher, obs: &Observation) -> bool {
    let (status, body, transport) = match obs {
        Observation::Response { status, body } => (Some(*status), body.as_str(), false),
        Observation::Transport { detail } => (None, detail.as_str(), true),
        Observation::Quiescence => return false,
    };
    if matcher.transport_rejected && !transport {
        return false;
    }
    if let Some(pattern) = &matcher.status {
        match status {
            Some(s) => {
                if !status_matches(pattern, s) {
                    return false;
                }
            }
            // Transport failures carry no status; only a wildcard accepts
            // them.
            None => {
                if pattern != restmut_core::WILDCARD {
                    return false;
                }
            }
        }
    }
    if let Some(expected) = &matcher.body_equals {
        if body != expected {
            return false;
        }
    }
    if let Some(needle) = &matcher.body_contains {
        if !contains_ci(body, needle) {
            return false;
        }
    }
    if let Some(needle) = &matcher.body_not_contains {
        if contains_ci(body, needle) {
            return false;
        }
    }
    if matcher.not_crash && obs.is_crash() {
        return false;
    }
    true
}

// Substring matching on bodies is case-insensitive.
fn contains_ci(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

fn describe(obs: &Observation) -> String {
    match obs {
        Observation::Response { status, body } => {
            let mut preview = body.chars().take(80).collect::<String>();
            if preview.len() < body.len() {
                preview.push('…');
            }
            format!("status {status}, body \"{preview}\"")
        }
        Observation::Quiescence => "quiescence".into(),
        Observation::Transport { detail } => format!("transport failure: {detail}"),
    }
}

/// Runs plans sequentially against one SUT, sharing a single mock listener.
pub async fn run_suite(plans: &[TestPlan], sut_url: &str, cfg: &ExecConfig) -> std::io::Result<SuiteReport> {
    let mock = MockServer::start(cfg.mock_port).await?;
    Ok(run_suite_with_mock(plans, sut_url, &mock, cfg).await)
}

/// `run_suite` against an already-bound mock listener: needed when the SUT
/// was started with the mock URL as its dependee endpoint.
pub async fn run_suite_with_mock(
    plans: &[TestPlan],
    sut_url: &str,
    mock: &MockServer,
    cfg: &ExecConfig,
) -> SuiteReport {
    let client = http_client(cfg);
    let mut results = Vec::with_capacity(plans.len());
    for plan in plans {
        results.push(run_plan(&client, plan, sut_url, mock).await);
    }
    SuiteReport::from_results(sut_url, results)
}
