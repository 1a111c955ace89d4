//! End-to-end ingestion: log bytes in, labeled valid test cases out.

use restmut_core::doc::load;
use restmut_core::labels;
use restmut_core::validate::validate;
use restmut_ingest::{build_test_cases, label_exchanges, parse_log, LabelConfig, SessionKey};

fn fixture(name: &str) -> Vec<u8> {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read(path).expect("fixture present")
}

/// The four CheckRisk exchanges without the login prologue.
const RISK_ONLY: &str = concat!(
    r#"{"ts":1,"from":"Client","to":"AccMan","kind":"request","method":"GET","path":"/checkAccountRisk","headers":{"token":"1234"},"body":"\"acc\"=99"}"#, "\n",
    r#"{"ts":2,"from":"AccMan","to":"CheckRisk","kind":"request","method":"GET","path":"/evaluateRisk","headers":{"acc":"99","token":"1234"}}"#, "\n",
    r#"{"ts":3,"from":"CheckRisk","to":"AccMan","kind":"response","status":200,"headers":{"token":"1234"},"body":"LOWRISK"}"#, "\n",
    r#"{"ts":4,"from":"AccMan","to":"Client","kind":"response","status":200,"body":"LOWRISK"}"#, "\n",
);

#[test]
fn four_exchange_log_builds_the_canonical_shape() {
    let cfg = LabelConfig::new("AccMan");
    let parsed = parse_log(RISK_ONLY.as_bytes(), false).unwrap();
    let labeled = label_exchanges(parsed.exchanges, &cfg);
    let outcome = build_test_cases(&labeled, &cfg, &SessionKey::ClientId);
    assert_eq!(outcome.test_cases.len(), 1, "warnings: {:?}", outcome.warnings);

    let (_, built) = &outcome.test_cases[0];
    let reference = load(&fixture("accman_checkrisk.json")).unwrap();
    assert_eq!(built.steps.len(), reference.steps.len());
    for (b, r) in built.steps.iter().zip(&reference.steps) {
        let (be, re) = (b.event.as_ref().unwrap(), r.event.as_ref().unwrap());
        assert_eq!(be.rendered(), re.rendered());
        assert_eq!(be.params.from, re.params.from);
        assert_eq!(be.params.to, re.params.to);
        assert_eq!(be.params.method, re.params.method);
        assert_eq!(be.params.path, re.params.path);
        assert_eq!(be.params.status, re.params.status);
        assert_eq!(b.has_label(labels::MOCK), r.has_label(labels::MOCK));
    }
    assert!(validate(built).is_valid());
    assert_eq!(built.steps.last().unwrap().target, built.verdicts.pass);
}

#[test]
fn shipped_demo_log_yields_one_labeled_session() {
    let cfg = LabelConfig::new("AccMan");
    let parsed = parse_log(&fixture("accman_log.jsonl"), false).unwrap();
    let labeled = label_exchanges(parsed.exchanges, &cfg);
    assert!(labeled[0].labels.contains(labels::LOGIN));
    assert!(labeled[1].labels.contains(labels::TOKEN_CREATION));
    assert!(labeled[2].labels.contains(labels::TOKEN));
    assert!(labeled[4].labels.contains(labels::MOCK));
    assert!(labeled[4].labels.contains(labels::TOKEN));

    let outcome = build_test_cases(&labeled, &cfg, &SessionKey::ClientId);
    assert_eq!(outcome.test_cases.len(), 1);
    let (_, tc) = &outcome.test_cases[0];
    assert_eq!(tc.steps.len(), 6);
    assert!(validate(tc).is_valid());
    assert_eq!(outcome.bindings.tokens, vec!["1234".to_string()]);
    assert_eq!(outcome.bindings.lookup("ACC"), Some("99"));
}

#[test]
fn unanswered_request_drops_the_session() {
    let log = r#"{"ts":1,"from":"Client","to":"S","kind":"request","method":"GET","path":"/x"}"#;
    let cfg = LabelConfig::new("S");
    let parsed = parse_log(log.as_bytes(), false).unwrap();
    let labeled = label_exchanges(parsed.exchanges, &cfg);
    let outcome = build_test_cases(&labeled, &cfg, &SessionKey::ClientId);
    assert!(outcome.test_cases.is_empty());
    assert_eq!(outcome.warnings.len(), 1);
    assert!(outcome.warnings[0].contains("request without response"));
}

#[test]
fn interleaved_clients_split_into_two_sessions() {
    let log = concat!(
        r#"{"ts":1,"from":"A","to":"S","kind":"request","method":"GET","path":"/x"}"#, "\n",
        r#"{"ts":2,"from":"B","to":"S","kind":"request","method":"GET","path":"/y"}"#, "\n",
        r#"{"ts":3,"from":"S","to":"A","kind":"response","status":200}"#, "\n",
        r#"{"ts":4,"from":"S","to":"B","kind":"response","status":200}"#, "\n",
    );
    let cfg = LabelConfig::new("S");
    let parsed = parse_log(log.as_bytes(), false).unwrap();
    let labeled = label_exchanges(parsed.exchanges, &cfg);
    let outcome = build_test_cases(&labeled, &cfg, &SessionKey::ClientId);
    assert_eq!(outcome.test_cases.len(), 2);
    // Partition: every exchange lands in exactly one session.
    let total: usize = outcome.test_cases.iter().map(|(_, tc)| tc.steps.len()).sum();
    assert_eq!(total, 4);
    for (_, tc) in &outcome.test_cases {
        assert_eq!(tc.steps.len(), 2);
        assert!(validate(tc).is_valid());
    }
}

#[test]
fn cookie_session_key_partitions_by_cookie_value() {
    let log = concat!(
        r#"{"ts":1,"from":"A","to":"S","kind":"request","method":"GET","path":"/x","cookies":{"sid":"one"}}"#, "\n",
        r#"{"ts":2,"from":"S","to":"A","kind":"response","status":200}"#, "\n",
        r#"{"ts":3,"from":"A","to":"S","kind":"request","method":"GET","path":"/y","cookies":{"sid":"two"}}"#, "\n",
        r#"{"ts":4,"from":"S","to":"A","kind":"response","status":200}"#, "\n",
    );
    let cfg = LabelConfig::new("S");
    let parsed = parse_log(log.as_bytes(), false).unwrap();
    let labeled = label_exchanges(parsed.exchanges, &cfg);
    let outcome = build_test_cases(&labeled, &cfg, &SessionKey::Cookie("sid".into()));
    assert_eq!(outcome.test_cases.len(), 2);
}
