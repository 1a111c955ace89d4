//! Versioned JSON document format for test cases (`"schema": "iots/1"`).
//!
//! `store ∘ load` is the identity on canonical documents: the loader accepts
//! any schema-valid document, normalizes verdict θ self-loops away, and the
//! writer emits a canonical pretty-printed form (struct field order, sorted
//! label sets and cookie maps, headers in document order).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::testcase::{StateId, TestCase, TestStep, VerdictStates};

pub const SCHEMA: &str = "iots/1";

#[derive(Debug, Error)]
pub enum DocError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema \"{0}\", expected \"{SCHEMA}\"")]
    Schema(String),
    #[error("schema violation: {0}")]
    Invalid(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema: String,
    #[serde(rename = "sutId")]
    sut_id: String,
    initial: StateId,
    states: Vec<StateId>,
    verdicts: VerdictStates,
    steps: Vec<TestStep>,
}

/// Parses, checks references and event roles, and normalizes the result.
pub fn load(bytes: &[u8]) -> Result<TestCase, DocError> {
    let doc: Document = serde_json::from_slice(bytes)?;
    if doc.schema != SCHEMA {
        return Err(DocError::Schema(doc.schema));
    }
    let tc = TestCase {
        sut_id: doc.sut_id,
        initial: doc.initial,
        states: doc.states,
        verdicts: doc.verdicts,
        steps: doc.steps,
    };
    check_refs(&tc)?;
    check_events(&tc)?;
    Ok(normalize(tc))
}

/// Canonical serialized form, pretty-printed with a trailing newline.
pub fn store(tc: &TestCase) -> Vec<u8> {
    let doc = Document {
        schema: SCHEMA.to_string(),
        sut_id: tc.sut_id.clone(),
        initial: tc.initial.clone(),
        states: tc.states.clone(),
        verdicts: tc.verdicts.clone(),
        steps: tc.steps.clone(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("test case serialization cannot fail");
    out.push(b'\n');
    out
}

fn check_refs(tc: &TestCase) -> Result<(), DocError> {
    let known = |s: &str| tc.contains_state(s);
    if !known(&tc.initial) {
        return Err(DocError::Invalid(format!("initial state \"{}\" is not declared", tc.initial)));
    }
    for v in [&tc.verdicts.pass, &tc.verdicts.fail, &tc.verdicts.inc] {
        if !known(v) {
            return Err(DocError::Invalid(format!("verdict state \"{v}\" is not declared")));
        }
    }
    for (i, step) in tc.steps.iter().enumerate() {
        for s in [&step.source, &step.target] {
            if !known(s) {
                return Err(DocError::Invalid(format!("step {i} references undefined state \"{s}\"")));
            }
        }
    }
    Ok(())
}

fn check_events(tc: &TestCase) -> Result<(), DocError> {
    for (i, step) in tc.steps.iter().enumerate() {
        let Some(event) = &step.event else { continue };
        let p = &event.params;
        if event.label.is_empty() {
            return Err(DocError::Invalid(format!("step {i}: empty event label")));
        }
        if p.from.is_empty() || p.to.is_empty() {
            return Err(DocError::Invalid(format!("step {i}: events must identify source and destination")));
        }
        let is_req = p.method.is_some();
        let is_resp = p.status.is_some();
        if is_req == is_resp {
            return Err(DocError::Invalid(format!(
                "step {i}: event must be exactly one of request (method+path) or response (status)"
            )));
        }
        if is_req && p.path.is_none() {
            return Err(DocError::Invalid(format!("step {i}: request event lacks a path")));
        }
    }
    Ok(())
}

/// Drops verdict θ self-loops; they are permitted in serialized form but add
/// nothing to the semantics.
fn normalize(mut tc: TestCase) -> TestCase {
    tc.steps.retain(|s| {
        !(s.source == s.target && s.is_quiescence() && tc.verdicts.of(&s.source).is_some())
    });
    tc
}
