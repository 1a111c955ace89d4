//! The executable test-plan format (`"schema": "plan/1"`): ordered driver
//! actions, response matchers and mock rules for one mutant.

use std::collections::BTreeMap;

use restmut_core::{Headers, Verdict, WILDCARD};
use serde::{Deserialize, Serialize};

pub const PLAN_SCHEMA: &str = "plan/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestPlan {
    pub schema: String,
    pub mutant_id: String,
    pub operator: String,
    pub sut_id: String,
    pub seed: u64,
    pub actions: Vec<DriverAction>,
    pub mock_rules: Vec<MockRule>,
    /// Wildcard assignments resolved at concretization time, by parameter
    /// name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bindings: BTreeMap<String, String>,
}

impl TestPlan {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("plan serialization cannot fail");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum DriverAction {
    Send(SendAction),
    Expect(ExpectAction),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SendAction {
    pub method: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Headers::is_empty")]
    pub headers: Headers,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cookies: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    /// How many times to deliver the request back to back.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub repeat: u32,
    /// Delay before the (first) delivery.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delay_ms: u64,
    /// Replay over a plain, untrusted channel.
    #[serde(default, skip_serializing_if = "is_false")]
    pub insecure: bool,
}

fn one() -> u32 {
    1
}
fn is_one(v: &u32) -> bool {
    *v == 1
}
fn is_zero(v: &u64) -> bool {
    *v == 0
}
fn is_false(v: &bool) -> bool {
    !*v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExpectAction {
    /// Most specific first; the last matcher is always total, so every
    /// observation maps to exactly one outcome.
    pub matchers: Vec<ResponseMatcher>,
    /// Verdict when nothing is observed within the quiescence timeout.
    pub quiescence: Verdict,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchOutcome {
    Pass,
    Fail,
    #[default]
    Inc,
    Continue,
}

impl MatchOutcome {
    pub fn verdict(self) -> Option<Verdict> {
        match self {
            MatchOutcome::Pass => Some(Verdict::Pass),
            MatchOutcome::Fail => Some(Verdict::Fail),
            MatchOutcome::Inc => Some(Verdict::Inc),
            MatchOutcome::Continue => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResponseMatcher {
    /// Status pattern: exact (`"405"`), alternation (`"401|403"`), range
    /// (`"401..403"`) or wildcard (`"*"`/absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_equals: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_not_contains: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub not_crash: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub transport_rejected: bool,
    pub outcome: MatchOutcome,
}

impl ResponseMatcher {
    /// Total matcher: matches any observation.
    pub fn is_catch_all(&self) -> bool {
        self.status.as_deref().map_or(true, |s| s == WILDCARD)
            && self.body_equals.is_none()
            && self.body_contains.is_none()
            && self.body_not_contains.is_none()
            && !self.not_crash
            && !self.transport_rejected
    }

    /// Number of concrete constraints; used to order matchers most-specific
    /// first.
    pub fn specificity(&self) -> usize {
        let mut n = 0;
        if self.status.as_deref().is_some_and(|s| s != WILDCARD) {
            n += 1;
        }
        n += self.body_equals.is_some() as usize;
        n += self.body_contains.is_some() as usize;
        n += self.body_not_contains.is_some() as usize;
        n += self.not_crash as usize;
        n += self.transport_rejected as usize;
        n
    }
}

/// Matches a status against a pattern: `*`, exact, `a|b|c`, or `lo..hi`
/// (inclusive).
pub fn status_matches(pattern: &str, status: u16) -> bool {
    if pattern == WILDCARD {
        return true;
    }
    if let Some((lo, hi)) = pattern.split_once("..") {
        if let (Ok(lo), Ok(hi)) = (lo.parse::<u16>(), hi.parse::<u16>()) {
            return (lo..=hi).contains(&status);
        }
        return false;
    }
    pattern.split('|').any(|alt| alt.trim().parse::<u16>() == Ok(status))
}

/// One mock expectation: a request matcher, the canned response, and the
/// exact number of calls the mutant prescribes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MockRule {
    /// `*` matches any method.
    pub method: String,
    /// Path without query; `*` matches any path.
    pub path: String,
    /// Required headers; values may be `*`. Matched as a subset of the
    /// observed request headers, names case-insensitive.
    #[serde(default, skip_serializing_if = "Headers::is_empty")]
    pub headers: Headers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_contains: Option<String>,
    pub status: u16,
    #[serde(default, skip_serializing_if = "Headers::is_empty")]
    pub response_headers: Headers,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub body: String,
    /// Exact expected call count; the rule stops responding once exhausted.
    pub times: u32,
    /// Delay before the mock answers.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delay_ms: u64,
    /// Excluded from call-count verification (scheduled after a mock
    /// shutdown).
    #[serde(default, skip_serializing_if = "is_false")]
    pub exempt: bool,
    /// Shut the whole mock down once this rule has served its last call.
    #[serde(default, skip_serializing_if = "is_false")]
    pub shutdown_after: bool,
}

impl MockRule {
    pub fn describe(&self) -> String {
        format!("{} {} -> {}", self.method, self.path, self.status)
    }

    /// Matcher identity plus response identity, ignoring counts.
    pub fn same_shape(&self, other: &MockRule) -> bool {
        self.method == other.method
            && self.path == other.path
            && self.headers == other.headers
            && self.body_contains == other.body_contains
            && self.status == other.status
            && self.response_headers == other.response_headers
            && self.body == other.body
            && self.delay_ms == other.delay_ms
    }
}
