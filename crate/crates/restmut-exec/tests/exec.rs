//! Execution-layer integration tests: concretization of the canonical
//! mutant, mock rule derivation, verdict semantics against scripted
//! services, mock verification, and the demo fixtures.

use std::collections::BTreeMap;

use restmut_core::doc::load;
use restmut_core::{labels, Direction, Event, EventParams, Headers, TestCase, TestStep, Verdict};
use restmut_engine::mutate_marked;
use restmut_exec::fixtures::{
    spawn_demo_sut, spawn_scripted_sut, DemoConfig, DemoMode, ScriptedBehavior,
};
use restmut_exec::runner::http_client;
use restmut_exec::{
    concretize, run_plan, run_suite_with_mock, DriverAction, ExecConfig, MatchOutcome, MockServer, TestPlan,
};
use restmut_ops::{by_slug, MutationContext, OperatorConfig, Variant};

fn accman() -> TestCase {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/accman_checkrisk.json");
    load(&std::fs::read(path).unwrap()).unwrap()
}

fn no_bindings() -> BTreeMap<String, String> {
    BTreeMap::new()
}

/// Token Removal applied to the mock response of the canonical test case —
/// the reference mutant for plan checks.
fn canonical_mutant() -> TestCase {
    let cfg = OperatorConfig::default();
    let ctx = MutationContext { config: &cfg, seed: 42, foreign_tokens: &[] };
    let op = by_slug("token-removal").unwrap();
    mutate_marked(&accman(), "accman", 2, op, &Variant { index: 0, name: "default" }, &ctx)
        .unwrap()
        .mutant
}

fn canonical_plan() -> TestPlan {
    concretize(&canonical_mutant(), "token-removal", "m-ref", &no_bindings(), 42).unwrap()
}

#[test]
fn canonical_plan_has_one_send_one_expect_one_mock_rule() {
    let plan = canonical_plan();

    assert_eq!(plan.actions.len(), 2);
    let DriverAction::Send(send) = &plan.actions[0] else {
        panic!("first action must be the request");
    };
    assert_eq!(send.method, "GET");
    assert_eq!(send.path, "/checkAccountRisk");
    assert_eq!(send.headers.get("token"), Some("1234"));

    let DriverAction::Expect(expect) = &plan.actions[1] else {
        panic!("second action must be the observation");
    };
    // Rejection passes, anything else is inconclusive, silence fails.
    assert_eq!(expect.matchers[0].status.as_deref(), Some("401|403"));
    assert_eq!(expect.matchers[0].outcome, MatchOutcome::Pass);
    assert!(expect.matchers.last().unwrap().is_catch_all());
    assert_eq!(expect.matchers.last().unwrap().outcome, MatchOutcome::Inc);
    assert_eq!(expect.quiescence, Verdict::Fail);

    // The mock rule mirrors the dependee exchange: the request matcher keeps
    // its headers, the mutated response lost the token.
    assert_eq!(plan.mock_rules.len(), 1);
    let rule = &plan.mock_rules[0];
    assert_eq!(rule.method, "GET");
    assert_eq!(rule.path, "/evaluateRisk");
    assert_eq!(rule.headers.get("acc"), Some("99"));
    assert_eq!(rule.headers.get("token"), Some("1234"));
    assert_eq!(rule.status, 200);
    assert_eq!(rule.body, "LOWRISK");
    assert!(rule.response_headers.is_empty());
    assert_eq!(rule.times, 1);
}

#[test]
fn mutant_without_mock_steps_yields_no_rules() {
    // Token Removal on the client request prunes the dependee exchange.
    let cfg = OperatorConfig::default();
    let ctx = MutationContext { config: &cfg, seed: 1, foreign_tokens: &[] };
    let op = by_slug("token-removal").unwrap();
    let mutant = mutate_marked(&accman(), "accman", 0, op, &Variant { index: 0, name: "default" }, &ctx)
        .unwrap()
        .mutant;
    let plan = concretize(&mutant, "token-removal", "m-req", &no_bindings(), 1).unwrap();
    assert!(plan.mock_rules.is_empty());
    let DriverAction::Send(send) = &plan.actions[0] else { panic!() };
    assert!(send.headers.get("token").is_none(), "token removed from the request");
}

#[test]
fn repeated_mock_exchanges_aggregate_into_times_two() {
    // Hand-built mutant fragment with the same dependee exchange twice.
    let mut tc = TestCase::skeleton("S", "q0");
    for q in ["q1", "q2", "q3", "q4", "q5"] {
        tc.states.push(q.into());
    }
    let request = |source: &str, target: &str| TestStep {
        source: source.into(),
        event: Some(Event {
            label: "/dep".into(),
            direction: Direction::Output,
            params: EventParams {
                from: "S".into(),
                to: "D".into(),
                method: Some("GET".into()),
                path: Some("/dep".into()),
                ..Default::default()
            },
        }),
        labels: [labels::MOCK.to_string()].into_iter().collect(),
        target: target.into(),
    };
    let mock_resp = |source: &str, target: &str| TestStep {
        source: source.into(),
        event: Some(Event {
            label: "/ok".into(),
            direction: Direction::Output,
            params: EventParams {
                from: "D".into(),
                to: "S".into(),
                status: Some("200".into()),
                body: Some("data".into()),
                ..Default::default()
            },
        }),
        labels: [labels::MOCK.to_string()].into_iter().collect(),
        target: target.into(),
    };
    tc.steps.push(TestStep {
        source: "q0".into(),
        event: Some(Event {
            label: "/go".into(),
            direction: Direction::Input,
            params: EventParams {
                from: "C".into(),
                to: "S".into(),
                method: Some("POST".into()),
                path: Some("/go".into()),
                ..Default::default()
            },
        }),
        labels: Default::default(),
        target: "q1".into(),
    });
    tc.steps.push(request("q1", "q2"));
    tc.steps.push(mock_resp("q2", "q3"));
    tc.steps.push(request("q3", "q4"));
    tc.steps.push(mock_resp("q4", "q5"));
    tc.steps.push(TestStep {
        source: "q5".into(),
        event: Some(Event {
            label: "/ok".into(),
            direction: Direction::Output,
            params: EventParams {
                from: "S".into(),
                to: "C".into(),
                status: Some("200".into()),
                ..Default::default()
            },
        }),
        labels: Default::default(),
        target: "pass".into(),
    });
    let completed = restmut_engine::compl(tc);
    let plan = concretize(&completed, "manual", "m-two", &no_bindings(), 9).unwrap();
    assert_eq!(plan.mock_rules.len(), 1);
    assert_eq!(plan.mock_rules[0].times, 2);
}

#[test]
fn wildcards_resolve_from_bindings_first_then_seeded_random() {
    let mut tc = TestCase::skeleton("S", "q0");
    tc.states.push("q1".into());
    tc.steps.push(TestStep {
        source: "q0".into(),
        event: Some(Event {
            label: "/go".into(),
            direction: Direction::Input,
            params: EventParams {
                from: "C".into(),
                to: "S".into(),
                method: Some("GET".into()),
                path: Some("/go".into()),
                headers: Headers::from_pairs([("token", "*"), ("trace", "*")]),
                ..Default::default()
            },
        }),
        labels: Default::default(),
        target: "q1".into(),
    });
    tc.steps.push(TestStep {
        source: "q1".into(),
        event: Some(Event {
            label: "/ok".into(),
            direction: Direction::Output,
            params: EventParams {
                from: "S".into(),
                to: "C".into(),
                status: Some("200".into()),
                ..Default::default()
            },
        }),
        labels: Default::default(),
        target: "pass".into(),
    });
    let completed = restmut_engine::compl(tc);

    let mut bindings = BTreeMap::new();
    bindings.insert("token".to_string(), "recorded-tok".to_string());

    let plan_a = concretize(&completed, "manual", "m-wild", &bindings, 5).unwrap();
    let plan_b = concretize(&completed, "manual", "m-wild", &bindings, 5).unwrap();
    let DriverAction::Send(send) = &plan_a.actions[0] else { panic!() };
    assert_eq!(send.headers.get("token"), Some("recorded-tok"), "recorded value wins");
    let trace = send.headers.get("trace").unwrap();
    assert_eq!(trace.len(), 8, "random values are 8 alphanumerics");
    assert_ne!(trace, "*");
    assert_eq!(plan_a, plan_b, "resolution is deterministic per seed");

    let plan_c = concretize(&completed, "manual", "m-wild", &bindings, 6).unwrap();
    let DriverAction::Send(send_c) = &plan_c.actions[0] else { panic!() };
    assert_ne!(send_c.headers.get("trace"), send.headers.get("trace"), "seed changes random values");
}

async fn run_canonical_against(behavior: ScriptedBehavior, quiescence_ms: u64) -> restmut_exec::TestResult {
    let cfg = ExecConfig { quiescence_timeout_ms: quiescence_ms, mock_port: 0 };
    let mock = MockServer::start(0).await.unwrap();
    let sut = spawn_scripted_sut(behavior, Some(mock.url()), 0).await.unwrap();
    let client = http_client(&cfg);
    run_plan(&client, &canonical_plan(), &sut.url(), &mock).await
}

#[tokio::test]
async fn rejection_response_passes() {
    let result = run_canonical_against(
        ScriptedBehavior::CallMockThenRespond { status: 403, body: "denied".into() },
        2_000,
    )
    .await;
    assert_eq!(result.verdict, Verdict::Pass, "{result:?}");
    assert!(result.mock.ok, "{:?}", result.mock);
    assert!(!result.vulnerability);
}

#[tokio::test]
async fn accepting_response_is_inconclusive_and_flagged() {
    let result = run_canonical_against(
        ScriptedBehavior::CallMockThenRespond { status: 200, body: "LOWRISK".into() },
        2_000,
    )
    .await;
    assert_eq!(result.verdict, Verdict::Inc, "{result:?}");
    assert!(result.vulnerability, "success after token removal must be flagged");
    assert!(result.warning.is_some());
}

#[tokio::test]
async fn silence_past_the_timeout_fails() {
    let result = run_canonical_against(ScriptedBehavior::Silent, 400).await;
    assert_eq!(result.verdict, Verdict::Fail, "{result:?}");
    // The silent service never called the dependee, so the mock contract is
    // broken too; fail takes precedence over the inconclusive demotion.
    assert!(!result.mock.ok);
}

#[tokio::test]
async fn skipped_dependee_demotes_pass_to_inconclusive() {
    // 403 without ever calling the dependee: the rejection matches the pass
    // branch but the mock contract (exactly one call) is violated.
    let result = run_canonical_against(
        ScriptedBehavior::Respond { status: 403, body: "denied".into() },
        2_000,
    )
    .await;
    assert_eq!(result.verdict, Verdict::Inc);
    assert_eq!(result.failure_reason.as_deref(), Some("mock contract violated"));
    assert_eq!(result.mock.mismatches.len(), 1);
    assert_eq!(result.mock.mismatches[0].expected, 1);
    assert_eq!(result.mock.mismatches[0].observed, 0);
}

#[tokio::test]
async fn replaying_a_plan_yields_the_same_result_modulo_timing() {
    let a = run_canonical_against(
        ScriptedBehavior::CallMockThenRespond { status: 403, body: "denied".into() },
        2_000,
    )
    .await;
    let b = run_canonical_against(
        ScriptedBehavior::CallMockThenRespond { status: 403, body: "denied".into() },
        2_000,
    )
    .await;
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.mock, b.mock);
    assert_eq!(a.vulnerability, b.vulnerability);
    assert_eq!(a.observed.len(), b.observed.len());
}

#[tokio::test]
async fn unreachable_sut_aborts_with_an_environment_result() {
    let cfg = ExecConfig { quiescence_timeout_ms: 500, mock_port: 0 };
    let mock = MockServer::start(0).await.unwrap();
    // Nothing listens on the mock's port once it is stopped; use an address
    // that is certainly closed.
    let dead = "http://127.0.0.1:1";
    let client = http_client(&cfg);
    let result = run_plan(&client, &canonical_plan(), dead, &mock).await;
    assert!(result.environment, "{result:?}");
    assert_eq!(result.verdict, Verdict::Inc);
    assert!(result.failure_reason.as_deref().unwrap_or("").contains("environment"));

    let report = restmut_exec::SuiteReport::from_results(dead, vec![result]);
    assert_eq!(report.exit_code(), 2);
}

#[tokio::test]
async fn suite_summary_counts_verdicts() {
    let cfg = ExecConfig { quiescence_timeout_ms: 2_000, mock_port: 0 };
    let mock = MockServer::start(0).await.unwrap();
    let sut = spawn_scripted_sut(
        ScriptedBehavior::CallMockThenRespond { status: 403, body: "denied".into() },
        Some(mock.url()),
        0,
    )
    .await
    .unwrap();

    // Same plan twice: both pass against the rejecting service.
    let plans = vec![canonical_plan(), canonical_plan()];
    let report = run_suite_with_mock(&plans, &sut.url(), &mock, &cfg).await;
    assert_eq!(report.summary.pass, 2);
    assert_eq!(report.summary.fail, 0);
    assert_eq!(report.exit_code(), 0);
    assert_eq!(report.per_operator["token-removal"].total, 2);
}

#[tokio::test]
async fn mock_shutdown_aborts_subsequent_calls_and_exempts_later_rules() {
    use restmut_exec::plan::MockRule;
    let mock = MockServer::start(0).await.unwrap();
    let rule = |path: &str, shutdown: bool, exempt: bool| MockRule {
        method: "GET".into(),
        path: path.into(),
        headers: Headers::new(),
        body_contains: None,
        status: 200,
        response_headers: Headers::new(),
        body: "ok".into(),
        times: 1,
        delay_ms: 0,
        exempt,
        shutdown_after: shutdown,
    };
    mock.install(&[rule("/first", true, false), rule("/second", false, true)]);

    let client = reqwest::Client::builder()
        .timeout(std::time::Duration::from_millis(1_000))
        .build()
        .unwrap();
    let ok = client.get(format!("{}/first", mock.url())).send().await.unwrap();
    assert_eq!(ok.status().as_u16(), 200);
    // The mock is down now: the next call dies at the transport level.
    assert!(client.get(format!("{}/second", mock.url())).send().await.is_err());

    // /first was served once (exact), /second is exempt: verification is ok.
    let verification = mock.verification();
    assert!(verification.ok, "{verification:?}");
}

#[tokio::test]
async fn secure_demo_rejects_what_the_vulnerable_demo_accepts() {
    let mock = MockServer::start(0).await.unwrap();
    mock.install(&canonical_plan().mock_rules);

    let secure = spawn_demo_sut(
        DemoConfig {
            mode: DemoMode::Secure,
            dependee_url: Some(mock.url()),
            session_ttl_ms: 10_000,
            ..Default::default()
        },
        0,
    )
    .await
    .unwrap();
    let vulnerable = spawn_demo_sut(
        DemoConfig {
            mode: DemoMode::Vulnerable,
            dependee_url: Some(mock.url()),
            session_ttl_ms: 10_000,
            ..Default::default()
        },
        0,
    )
    .await
    .unwrap();

    let client = reqwest::Client::new();
    // Verb tampering.
    let secure_put = client
        .put(format!("{}/login", secure.url()))
        .body("user=alice&pass=wonder")
        .send()
        .await
        .unwrap();
    assert_eq!(secure_put.status().as_u16(), 405);
    let vulnerable_put = client
        .put(format!("{}/login", vulnerable.url()))
        .body("user=alice&pass=wonder")
        .send()
        .await
        .unwrap();
    assert_eq!(vulnerable_put.status().as_u16(), 200);

    // Missing token.
    client
        .post(format!("{}/login", secure.url()))
        .body("user=alice&pass=wonder")
        .send()
        .await
        .unwrap();
    let no_token = client
        .get(format!("{}/checkAccountRisk", secure.url()))
        .send()
        .await
        .unwrap();
    assert_eq!(no_token.status().as_u16(), 401);

    mock.install(&canonical_plan().mock_rules);
    let vuln_no_token = client
        .get(format!("{}/checkAccountRisk", vulnerable.url()))
        .send()
        .await
        .unwrap();
    assert_eq!(vuln_no_token.status().as_u16(), 200, "missing token is ignored");

    // Session expiry: the secure demo terminates stale sessions.
    let short = spawn_demo_sut(
        DemoConfig {
            mode: DemoMode::Secure,
            dependee_url: Some(mock.url()),
            session_ttl_ms: 100,
            ..Default::default()
        },
        0,
    )
    .await
    .unwrap();
    client
        .post(format!("{}/login", short.url()))
        .body("user=alice&pass=wonder")
        .send()
        .await
        .unwrap();
    tokio::time::sleep(std::time::Duration::from_millis(250)).await;
    let stale = client
        .get(format!("{}/checkAccountRisk", short.url()))
        .header("token", "1234")
        .send()
        .await
        .unwrap();
    assert_eq!(stale.status().as_u16(), 401);
    assert!(stale.text().await.unwrap().contains("session terminated"));
}
