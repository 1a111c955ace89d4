//! Per-mutant results and the suite report (`"schema": "report/1"`), with
//! JUnit XML export.

use std::collections::BTreeMap;
use std::time::Instant;

use restmut_core::Verdict;
use serde::{Deserialize, Serialize};

use crate::mock::MockVerification;
use crate::runner::Observation;

pub const REPORT_SCHEMA: &str = "report/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObservedEvent {
    pub at_ms: u64,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl ObservedEvent {
    pub fn from_observation(obs: &Observation, started: Instant, path: &str) -> Self {
        let at_ms = started.elapsed().as_millis() as u64;
        match obs {
            Observation::Response { status, body } => ObservedEvent {
                at_ms,
                kind: "response".into(),
                status: Some(*status),
                detail: format!("{path}: {}", preview(body)),
            },
            Observation::Quiescence => ObservedEvent {
                at_ms,
                kind: "quiescence".into(),
                status: None,
                detail: path.to_string(),
            },
            Observation::Transport { detail } => ObservedEvent {
                at_ms,
                kind: "transport".into(),
                status: None,
                detail: format!("{path}: {detail}"),
            },
        }
    }
}

fn preview(body: &str) -> String {
    let mut p: String = body.chars().take(120).collect();
    if p.len() < body.len() {
        p.push('…');
    }
    p
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestResult {
    pub mutant_id: String,
    pub operator: String,
    pub verdict: Verdict,
    pub observed: Vec<ObservedEvent>,
    pub mock: MockVerification,
    /// HTTP 500 or a transport reset was observed at some point.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub crash: bool,
    /// The service accepted the attack or crashed; worth a human look.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub vulnerability: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
    /// The run could not even start (SUT unreachable).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub environment: bool,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inc: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpStats {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub inc: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub schema: String,
    pub sut_url: String,
    pub summary: Summary,
    pub per_operator: BTreeMap<String, OpStats>,
    pub results: Vec<TestResult>,
}

impl SuiteReport {
    pub fn from_results(sut_url: &str, results: Vec<TestResult>) -> Self {
        let mut summary = Summary::default();
        let mut per_operator: BTreeMap<String, OpStats> = BTreeMap::new();
        for r in &results {
            let stats = per_operator.entry(r.operator.clone()).or_default();
            stats.total += 1;
            match r.verdict {
                Verdict::Pass => {
                    summary.pass += 1;
                    stats.pass += 1;
                }
                Verdict::Fail => {
                    summary.fail += 1;
                    stats.fail += 1;
                }
                Verdict::Inc => {
                    summary.inc += 1;
                    stats.inc += 1;
                }
            }
            if r.vulnerability {
                stats.flagged += 1;
            }
        }
        SuiteReport {
            schema: REPORT_SCHEMA.to_string(),
            sut_url: sut_url.to_string(),
            summary,
            per_operator,
            results,
        }
    }

    pub fn total(&self) -> usize {
        self.summary.pass + self.summary.fail + self.summary.inc
    }

    /// Percentage of executed mutants that reached the fail verdict.
    pub fn failed_pct(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            100.0 * self.summary.fail as f64 / self.total() as f64
        }
    }

    /// 0 when everything passed, 1 when any mutant failed, 2 when the
    /// environment broke (SUT unreachable or config error upstream).
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().any(|r| r.environment) {
            2
        } else if self.summary.fail > 0 {
            1
        } else {
            0
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serialization cannot fail");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    /// Human-readable summary table: per-operator counts and the failed-test
    /// percentage.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<24} {:>6} {:>6} {:>6} {:>6} {:>8}\n",
            "operator", "total", "pass", "fail", "inc", "flagged"
        ));
        for (op, s) in &self.per_operator {
            out.push_str(&format!(
                "{:<24} {:>6} {:>6} {:>6} {:>6} {:>8}\n",
                op, s.total, s.pass, s.fail, s.inc, s.flagged
            ));
        }
        out.push_str(&format!(
            "total: {}  pass: {}  fail: {}  inc: {}  failed tests: {:.0}%\n",
            self.total(),
            self.summary.pass,
            self.summary.fail,
            self.summary.inc,
            self.failed_pct()
        ));
        out
    }

    /// JUnit-style XML: one testcase per mutant, fail verdicts as failures,
    /// inconclusive verdicts as skipped with a message.
    pub fn to_junit(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!(
            "<testsuite name=\"restmut\" tests=\"{}\" failures=\"{}\" skipped=\"{}\">\n",
            self.total(),
            self.summary.fail,
            self.summary.inc
        ));
        for r in &self.results {
            let name = xml_escape(&format!("{}-{}", r.operator, r.mutant_id));
            let time = r.duration_ms as f64 / 1000.0;
            match r.verdict {
                Verdict::Pass => {
                    out.push_str(&format!("  <testcase name=\"{name}\" time=\"{time:.3}\"/>\n"));
                }
                Verdict::Fail => {
                    let msg = xml_escape(r.failure_reason.as_deref().unwrap_or("fail"));
                    out.push_str(&format!(
                        "  <testcase name=\"{name}\" time=\"{time:.3}\"><failure message=\"{msg}\"/></testcase>\n"
                    ));
                }
                Verdict::Inc => {
                    let msg = xml_escape(r.failure_reason.as_deref().unwrap_or("inconclusive"));
                    out.push_str(&format!(
                        "  <testcase name=\"{name}\" time=\"{time:.3}\"><skipped message=\"{msg}\"/></testcase>\n"
                    ));
                }
            }
        }
        out.push_str("</testsuite>\n");
        out
    }
}

fn xml_escape(raw: &str) -> String {
    raw.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
