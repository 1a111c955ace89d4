//! The operator catalog: one entry per tabulated attack, in stable order.

use std::collections::BTreeSet;

use restmut_core::traverse::pass_sequences;
use restmut_core::{labels, params, Direction, Event, EventParams, StateId, StepId, TestCase, TestStep, WILDCARD};
use thiserror::Error;

use crate::transform;
use crate::MutationContext;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OpError {
    #[error("expected exactly one step labeled \"mutation\", found {0}")]
    Marking(usize),
    #[error("operator condition unsatisfied on marked step {0}")]
    ConditionUnsatisfied(String),
    #[error("variant \"{0}\" is unavailable with the current configuration")]
    VariantUnavailable(String),
    #[error("no completion point below the marked step")]
    NoCompletionPoint,
}

/// One way of applying an operator. Most operators have a single variant;
/// Token Alteration has up to three (expired, foreign-session, nonexistent).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub index: usize,
    pub name: &'static str,
}

const DEFAULT_VARIANT: Variant = Variant { index: 0, name: "default" };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OpKind {
    EventDuplication,
    VerbChange,
    Xss,
    CryptoFailures,
    TokenRemoval,
    TokenRemovalCreation,
    TokenAlteration,
    Stress,
    Ssrf,
    BodyManipulation,
    CookieManipulation,
    FailedLoginDuplication,
    PathManipulation,
    SqlInjection,
    SessionManagement,
    InformationLeakage,
    DependeeShutdown,
    BufferOverflow,
}

/// A (condition, change, expected) triple with its metadata.
#[derive(Debug, Clone, Copy)]
pub struct MutationOperator {
    pub name: &'static str,
    pub slug: &'static str,
    pub sources: &'static [&'static str],
    pub description: &'static str,
    kind: OpKind,
}

static CATALOG: [MutationOperator; 18] = [
    MutationOperator {
        name: "Event Duplication",
        slug: "event-dup",
        sources: &["ENISA TM-20"],
        description: "duplicate an event sent to the service under test",
        kind: OpKind::EventDuplication,
    },
    MutationOperator {
        name: "HTTP Verb Change",
        slug: "verb-change",
        sources: &["CAPEC-274"],
        description: "change the HTTP verb of a request",
        kind: OpKind::VerbChange,
    },
    MutationOperator {
        name: "XSS Attack",
        slug: "xss",
        sources: &["ENISA TM-21", "CAPEC-63", "CWE-79"],
        description: "inject a cross-site scripting payload",
        kind: OpKind::Xss,
    },
    MutationOperator {
        name: "Cryptographic Failures",
        slug: "crypto-failures",
        sources: &["CAPEC-220", "ENISA PS-15", "CAPEC-276", "CWE-287"],
        description: "replay the event over a plain, untrusted channel",
        kind: OpKind::CryptoFailures,
    },
    MutationOperator {
        name: "Token Removal",
        slug: "token-removal",
        sources: &["CWE-602", "CWE-862", "CAPEC-114"],
        description: "delete the token carried by the event",
        kind: OpKind::TokenRemoval,
    },
    MutationOperator {
        name: "Token Removal on Creation",
        slug: "token-removal-creation",
        sources: &["CWE-602", "CWE-862", "CAPEC-114"],
        description: "delete the token where it is created",
        kind: OpKind::TokenRemovalCreation,
    },
    MutationOperator {
        name: "Token Alteration",
        slug: "token-alteration",
        sources: &["CAPEC-114"],
        description: "replace the token: expired, other-session, or nonexistent",
        kind: OpKind::TokenAlteration,
    },
    MutationOperator {
        name: "Stress Testing",
        slug: "stress",
        sources: &["CAPEC-488"],
        description: "replay the event many times in a small window",
        kind: OpKind::Stress,
    },
    MutationOperator {
        name: "SSRF Deny-by-default",
        slug: "ssrf",
        sources: &["ENISA"],
        description: "issue the event from an unknown component",
        kind: OpKind::Ssrf,
    },
    MutationOperator {
        name: "Body Data Manipulation",
        slug: "body-manip",
        sources: &["ENISA TM-06", "CAPEC-278", "CAPEC-92", "CWE-20", "CWE-125"],
        description: "replay the request with unauthorized data",
        kind: OpKind::BodyManipulation,
    },
    MutationOperator {
        name: "Cookie Manipulation",
        slug: "cookie-manip",
        sources: &["CWE-472", "CAPEC-31"],
        description: "replace a cookie value with an attack payload",
        kind: OpKind::CookieManipulation,
    },
    MutationOperator {
        name: "Failed Login Attempt Duplication",
        slug: "failed-login-dup",
        sources: &["ENISA TM-38", "CAPEC-49"],
        description: "replay the login with wrong credentials",
        kind: OpKind::FailedLoginDuplication,
    },
    MutationOperator {
        name: "Path Manipulation",
        slug: "path-manip",
        sources: &["CWE-22", "CAPEC-126"],
        description: "alter the URL to reach data it should not",
        kind: OpKind::PathManipulation,
    },
    MutationOperator {
        name: "SQL Injection",
        slug: "sql-injection",
        sources: &["CWE-89", "CAPEC-66"],
        description: "inject SQL through input data",
        kind: OpKind::SqlInjection,
    },
    MutationOperator {
        name: "Session Management",
        slug: "session-mgmt",
        sources: &["CAPEC-61", "CWE-613"],
        description: "insert a long delay before the event",
        kind: OpKind::SessionManagement,
    },
    MutationOperator {
        name: "Information Leakage",
        slug: "info-leakage",
        sources: &["CWE-200"],
        description: "redirect the request toward a sensitive resource",
        kind: OpKind::InformationLeakage,
    },
    MutationOperator {
        // No CAPEC/CWE grounding is known for this one.
        name: "Dependee Service Shutdown",
        slug: "dependee-shutdown",
        sources: &[],
        description: "shut the mock component down after it has been requested",
        kind: OpKind::DependeeShutdown,
    },
    MutationOperator {
        name: "Buffer Overflow",
        slug: "buffer-overflow",
        sources: &["CAPEC-100", "CWE-119"],
        description: "oversize input data to try to crash the service",
        kind: OpKind::BufferOverflow,
    },
];

/// All operators, in stable catalog order.
pub fn catalog() -> &'static [MutationOperator] {
    &CATALOG
}

pub fn by_slug(slug: &str) -> Option<&'static MutationOperator> {
    CATALOG.iter().find(|op| op.slug == slug)
}

/// The default operator selection: the four severe, frequent weaknesses.
pub fn default_ops() -> Vec<&'static MutationOperator> {
    ["verb-change", "path-manip", "session-mgmt", "token-removal"]
        .iter()
        .map(|slug| by_slug(slug).expect("default operator in catalog"))
        .collect()
}

impl MutationOperator {
    /// Pure predicate restricting which steps the operator applies to.
    /// Quiescence steps never satisfy any condition.
    pub fn condition(&self, step: &TestStep) -> bool {
        let Some(event) = &step.event else {
            return false;
        };
        match self.kind {
            OpKind::EventDuplication
            | OpKind::CryptoFailures
            | OpKind::Stress
            | OpKind::Ssrf
            | OpKind::SessionManagement
            | OpKind::BufferOverflow => true,
            OpKind::VerbChange | OpKind::PathManipulation | OpKind::InformationLeakage => {
                event.is_request()
            }
            OpKind::Xss | OpKind::BodyManipulation => {
                !event.body().is_empty() || !event.params.headers.is_empty()
            }
            OpKind::TokenRemoval | OpKind::TokenAlteration => step.has_label(labels::TOKEN),
            OpKind::TokenRemovalCreation => step.has_label(labels::TOKEN_CREATION),
            OpKind::CookieManipulation => !event.params.cookies.is_empty(),
            OpKind::FailedLoginDuplication => event.is_request() && step.has_label(labels::LOGIN),
            OpKind::DependeeShutdown => step.has_label(labels::MOCK),
            OpKind::SqlInjection => !event.body().is_empty(),
        }
    }

    /// The ways this operator applies under the given context, in stable
    /// order. Token Alteration drops the expired variant when no expired
    /// token is configured.
    pub fn variants(&self, ctx: &MutationContext) -> Vec<Variant> {
        match self.kind {
            OpKind::TokenAlteration => {
                let mut variants = Vec::new();
                if ctx.config.expired_token.is_some() {
                    variants.push(Variant { index: variants.len(), name: "expired" });
                }
                variants.push(Variant { index: variants.len(), name: "foreign" });
                variants.push(Variant { index: variants.len(), name: "unknown" });
                variants
            }
            _ => vec![DEFAULT_VARIANT],
        }
    }

    /// Applies the mutation to the one step labeled `mutation`: transforms
    /// its event, keeps the immediately following chain of steps still
    /// directed at the service under test, and prunes the rest of the
    /// subtree. The result is a pre-mutant that `expected` then completes.
    pub fn change(&self, tc: TestCase, variant: &Variant, ctx: &MutationContext) -> Result<TestCase, OpError> {
        let marked = find_marked(&tc)?;
        if !self.condition(&tc.steps[marked]) {
            return Err(OpError::ConditionUnsatisfied(tc.steps[marked].rendered()));
        }
        let (mut tc, marked) = prune_after(tc, marked);
        self.transform(&mut tc, marked, variant, ctx)?;
        match self.kind {
            OpKind::EventDuplication => {
                let copy = tc.steps[marked].event.clone();
                let step_labels = tc.steps[marked].labels.clone();
                insert_after(&mut tc, marked, copy, &step_labels);
            }
            OpKind::FailedLoginDuplication => {
                let mut copy = tc.steps[marked].event.clone().expect("condition requires an event");
                if !transform::corrupt_credentials(&mut copy, "wrong-creds") {
                    copy.params.headers.set("authorization", "wrong-creds");
                }
                copy.params
                    .extra
                    .insert(params::REPEAT.into(), ctx.config.failed_login_repeat.to_string());
                let labels = tc.steps[marked].labels.clone();
                insert_after(&mut tc, marked, Some(copy), &labels);
            }
            _ => {}
        }
        Ok(tc)
    }

    fn transform(&self, tc: &mut TestCase, marked: StepId, variant: &Variant, ctx: &MutationContext) -> Result<(), OpError> {
        let event = tc.steps[marked].event.as_mut().expect("condition requires an event");
        let cfg = ctx.config;
        match self.kind {
            OpKind::EventDuplication => {}
            OpKind::VerbChange => {
                const VERBS: [&str; 5] = ["POST", "PUT", "DELETE", "PATCH", "GET"];
                let current = event.params.method.clone().unwrap_or_default().to_ascii_uppercase();
                let replacement = VERBS
                    .iter()
                    .find(|v| **v != current)
                    .expect("five verbs cannot all equal one");
                event.params.method = Some(replacement.to_string());
            }
            OpKind::Xss => {
                let payload = cfg.payloads.xss[0].clone();
                if !event.body().is_empty() {
                    event.params.body = Some(format!("{}{payload}", event.body()));
                } else {
                    let first = event.params.headers.iter().next().map(|(n, _)| n.to_string());
                    if let Some(name) = first {
                        event.params.headers.set(&name, payload);
                    }
                }
            }
            OpKind::CryptoFailures => {
                event.params.extra.insert(params::INSECURE.into(), "true".into());
            }
            OpKind::TokenRemoval | OpKind::TokenRemovalCreation => {
                transform::remove_tokens(event, &cfg.token_keys);
            }
            OpKind::TokenAlteration => {
                let current = transform::token_values(event, &cfg.token_keys);
                let replacement = match variant.name {
                    "expired" => cfg
                        .expired_token
                        .clone()
                        .ok_or(OpError::VariantUnavailable("expired".into()))?,
                    "foreign" => ctx
                        .foreign_tokens
                        .iter()
                        .find(|t| !current.contains(t))
                        .cloned()
                        .unwrap_or_else(|| synth_token("foreign", ctx.seed, &current)),
                    _ => {
                        let mut avoid = current.clone();
                        avoid.extend(ctx.foreign_tokens.iter().cloned());
                        synth_token("nosuchtoken", ctx.seed, &avoid)
                    }
                };
                transform::replace_tokens(event, &cfg.token_keys, &replacement);
            }
            OpKind::Stress => {
                event.params.extra.insert(params::REPEAT.into(), cfg.stress_repeat.to_string());
            }
            OpKind::Ssrf => {
                event.params.from = cfg.unknown_component.clone();
            }
            OpKind::BodyManipulation => {
                let payload = cfg.payloads.unauthorized[0].clone();
                if !event.body().is_empty() {
                    event.params.body = Some(payload);
                } else {
                    let first = event.params.headers.iter().next().map(|(n, _)| n.to_string());
                    if let Some(name) = first {
                        event.params.headers.set(&name, payload);
                    }
                }
            }
            OpKind::CookieManipulation => {
                let payload = cfg.payloads.xss[0].clone();
                if let Some(first) = event.params.cookies.keys().next().cloned() {
                    event.params.cookies.insert(first, payload);
                }
            }
            OpKind::FailedLoginDuplication => {}
            OpKind::PathManipulation => {
                let base = event
                    .params
                    .path
                    .as_deref()
                    .unwrap_or("/")
                    .split('?')
                    .next()
                    .unwrap_or("/")
                    .trim_end_matches('/')
                    .to_string();
                let new_path = format!("{base}/{}", cfg.payloads.traversal[0]);
                event.label = new_path.clone();
                event.params.path = Some(new_path);
            }
            OpKind::SqlInjection => {
                let payload = cfg.payloads.sql[0].clone();
                event.params.body = Some(format!("{}{payload}", event.body()));
            }
            OpKind::SessionManagement => {
                event
                    .params
                    .extra
                    .insert(params::DELAY_MS.into(), cfg.session_delay_ms.to_string());
            }
            OpKind::InformationLeakage => {
                let target = cfg.sensitive_paths[0].clone();
                event.label = target.clone();
                event.params.path = Some(target);
            }
            OpKind::DependeeShutdown => {
                event.params.extra.insert(params::SHUTDOWN_AFTER.into(), "true".into());
            }
            OpKind::BufferOverflow => {
                event.params.body = Some("A".repeat(cfg.overflow_size));
            }
        }
        Ok(())
    }

    /// Completes a pre-mutant: every non-verdict leaf below the marked step
    /// gains the operator's pass branch(es), wildcard output steps from the
    /// service under test encoding the expected secure reaction.
    pub fn expected(&self, mut tc: TestCase, _ctx: &MutationContext) -> Result<TestCase, OpError> {
        let marked = find_marked(&tc)?;
        let root = tc.steps[marked].target.clone();
        let mut leaves: Vec<StateId> = subtree_states(&tc, &root)
            .into_iter()
            .filter(|s| !tc.is_verdict_state(s) && tc.outgoing(s).next().is_none())
            .collect();
        leaves.sort();
        if leaves.is_empty() {
            return Err(OpError::NoCompletionPoint);
        }
        let sut = tc.sut_id.clone();
        let pass = tc.verdicts.pass.clone();
        for leaf in leaves {
            for event in self.pass_branches(&sut) {
                tc.steps.push(TestStep {
                    source: leaf.clone(),
                    event: Some(event),
                    labels: BTreeSet::new(),
                    target: pass.clone(),
                });
            }
        }
        Ok(tc)
    }

    /// The tabulated expected behavior: response matchers (from the SUT) that
    /// lead to pass. Disjunctive expectations become several branches.
    fn pass_branches(&self, sut: &str) -> Vec<Event> {
        match self.kind {
            OpKind::EventDuplication => vec![matcher(sut, "*", &[(params::NOT_CRASH, "true")])],
            OpKind::VerbChange => vec![matcher(sut, "405", &[])],
            OpKind::Xss => vec![matcher(sut, "*", &[(params::NOT_CRASH, "true"), (params::BODY_CONTAINS, "error")])],
            OpKind::CryptoFailures => vec![matcher(sut, "*", &[(params::TRANSPORT_REJECTED, "true")])],
            OpKind::TokenRemoval => vec![matcher(sut, "401|403", &[])],
            OpKind::TokenRemovalCreation | OpKind::TokenAlteration => vec![matcher(sut, "401..403", &[])],
            OpKind::Stress => vec![matcher(
                sut,
                "*",
                &[(params::NOT_CRASH, "true"), (params::BODY_NOT_CONTAINS, "error")],
            )],
            OpKind::Ssrf => vec![
                matcher(sut, "404", &[(params::NOT_CRASH, "true")]),
                matcher(sut, "*", &[(params::NOT_CRASH, "true"), (params::BODY_CONTAINS, "error")]),
            ],
            OpKind::BodyManipulation => vec![matcher(sut, "400|422", &[])],
            OpKind::CookieManipulation => vec![matcher(sut, "400", &[])],
            OpKind::FailedLoginDuplication => vec![matcher(
                sut,
                "*",
                &[(params::NOT_CRASH, "true"), (params::BODY_CONTAINS, "Too Many Failed Attempt")],
            )],
            OpKind::PathManipulation => vec![matcher(sut, "404", &[])],
            OpKind::SqlInjection => vec![
                matcher(sut, "400", &[]),
                matcher(sut, "*", &[(params::BODY_CONTAINS, "error")]),
            ],
            OpKind::SessionManagement => {
                vec![matcher(sut, "401", &[(params::BODY_CONTAINS, "session terminated")])]
            }
            OpKind::InformationLeakage => vec![matcher(sut, "401", &[(params::NOT_CRASH, "true")])],
            OpKind::DependeeShutdown => vec![
                matcher(sut, "408", &[(params::NOT_CRASH, "true")]),
                matcher(sut, "*", &[(params::NOT_CRASH, "true"), (params::BODY_CONTAINS, "connexion timed out")]),
            ],
            OpKind::BufferOverflow => vec![matcher(sut, "400", &[(params::NOT_CRASH, "true")])],
        }
    }
}

/// Wildcard response matcher from the SUT with the given status pattern and
/// extra predicates.
fn matcher(sut: &str, status: &str, extras: &[(&str, &str)]) -> Event {
    Event {
        label: WILDCARD.into(),
        direction: Direction::Output,
        params: EventParams {
            from: sut.into(),
            to: WILDCARD.into(),
            status: Some(status.into()),
            extra: extras.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            ..Default::default()
        },
    }
}

/// Deterministic synthesized token value guaranteed to avoid the given set.
fn synth_token(prefix: &str, seed: u64, avoid: &[String]) -> String {
    let mut token = format!("{prefix}-{seed:08x}");
    while avoid.iter().any(|t| *t == token) {
        token.push('x');
    }
    token
}

fn find_marked(tc: &TestCase) -> Result<StepId, OpError> {
    let marked: Vec<StepId> = tc
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.has_label(labels::MUTATION))
        .map(|(i, _)| i)
        .collect();
    match marked.as_slice() {
        [one] => Ok(*one),
        other => Err(OpError::Marking(other.len())),
    }
}

/// States reachable from `root` (inclusive), ignoring verdict self-loops.
fn subtree_states(tc: &TestCase, root: &str) -> Vec<StateId> {
    let mut seen = vec![root.to_string()];
    let mut stack = vec![root.to_string()];
    while let Some(state) = stack.pop() {
        for (_, step) in tc.outgoing(&state) {
            if step.source == step.target {
                continue;
            }
            if !seen.contains(&step.target) {
                seen.push(step.target.clone());
                stack.push(step.target.clone());
            }
        }
    }
    seen
}

/// Keeps the maximal chain of consecutive SUT-directed steps following the
/// marked step along its pass sequence, prunes every other step below the
/// marked step's target, and drops states that became unreferenced. If the
/// completion point would be a verdict state, the last surviving step is
/// redirected to a fresh state. Returns the pruned test case and the marked
/// step's new id.
fn prune_after(mut tc: TestCase, marked: StepId) -> (TestCase, StepId) {
    let sut = tc.sut_id.clone();
    let continuation: Vec<StepId> = pass_sequences(&tc)
        .into_iter()
        .find(|seq| seq.contains(&marked))
        .map(|seq| {
            let at = seq.iter().position(|&s| s == marked).unwrap();
            seq[at + 1..].to_vec()
        })
        .unwrap_or_default();

    let kept: BTreeSet<StepId> = continuation
        .iter()
        .take_while(|&&id| {
            tc.steps[id]
                .event
                .as_ref()
                .is_some_and(|e| e.to() == sut)
        })
        .copied()
        .collect();

    // Prune: every step in the subtree of the marked target that is not part
    // of the kept chain.
    let subtree = subtree_states(&tc, &tc.steps[marked].target.clone());
    let removed: BTreeSet<StepId> = tc
        .steps
        .iter()
        .enumerate()
        .filter(|(id, s)| subtree.contains(&s.source) && !kept.contains(id) && *id != marked)
        .map(|(id, _)| id)
        .collect();

    let mut new_marked = marked;
    let mut survivors = Vec::with_capacity(tc.steps.len() - removed.len());
    let mut last_kept_new_id = None;
    for (id, step) in tc.steps.iter().enumerate() {
        if removed.contains(&id) {
            continue;
        }
        if id == marked {
            new_marked = survivors.len();
        }
        if kept.contains(&id) {
            last_kept_new_id = Some(survivors.len());
        }
        survivors.push(step.clone());
    }
    tc.steps = survivors;

    // The completion point must not be a verdict state.
    let boundary_step = last_kept_new_id.unwrap_or(new_marked);
    if tc.is_verdict_state(&tc.steps[boundary_step].target.clone()) {
        let fresh = tc.add_fresh_state("qm");
        tc.steps[boundary_step].target = fresh;
    }

    drop_orphan_states(&mut tc);
    (tc, new_marked)
}

fn drop_orphan_states(tc: &mut TestCase) {
    let referenced: BTreeSet<&str> = tc
        .steps
        .iter()
        .flat_map(|s| [s.source.as_str(), s.target.as_str()])
        .collect();
    let initial = tc.initial.clone();
    let verdicts = tc.verdicts.clone();
    tc.states.retain(|s| {
        referenced.contains(s.as_str())
            || *s == initial
            || verdicts.of(s).is_some()
    });
}

/// Splices a copy of the marked step's event right after it: the marked step
/// is re-targeted to a fresh state, from which the copy continues to the old
/// target. The copy never carries the mutation label.
fn insert_after(tc: &mut TestCase, marked: StepId, event: Option<Event>, step_labels: &BTreeSet<String>) {
    let old_target = tc.steps[marked].target.clone();
    let fresh = tc.add_fresh_state("qd");
    tc.steps[marked].target = fresh.clone();
    let mut copy_labels = step_labels.clone();
    copy_labels.remove(labels::MUTATION);
    tc.steps.push(TestStep {
        source: fresh,
        event,
        labels: copy_labels,
        target: old_target,
    });
}
