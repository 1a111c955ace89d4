//! Mutable-step detection and the `mark` operation.

use restmut_core::traverse::pass_sequences;
use restmut_core::{labels, Direction, StepId, TestCase};
use restmut_ops::MutationOperator;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("unknown step id {0}")]
    UnknownStep(StepId),
    #[error("test case \"{id}\" is invalid: {report}")]
    InvalidSource { id: String, report: String },
}

/// A step is mutable for an operator when its event is directed at the
/// service under test, the operator's condition holds, and the event is
/// either an input or performed by a mock component.
pub fn is_mutable(op: &MutationOperator, tc: &TestCase, step: StepId) -> bool {
    let Some(s) = tc.steps.get(step) else {
        return false;
    };
    let Some(event) = &s.event else {
        return false;
    };
    event.to() == tc.sut_id
        && op.condition(s)
        && (event.direction == Direction::Input || s.has_label(labels::MOCK))
}

/// All mutable steps, in step-id order. May be empty.
pub fn mutable_steps(op: &MutationOperator, tc: &TestCase) -> Vec<StepId> {
    (0..tc.steps.len()).filter(|&i| is_mutable(op, tc, i)).collect()
}

/// Mutable steps restricted to pass-ending sequences, ordered by first
/// occurrence in the canonical depth-first traversal. This is the order in
/// which mutants are generated.
pub fn mutable_steps_on_pass(op: &MutationOperator, tc: &TestCase) -> Vec<StepId> {
    let mut ordered = Vec::new();
    for seq in pass_sequences(tc) {
        for step in seq {
            if !ordered.contains(&step) && is_mutable(op, tc, step) {
                ordered.push(step);
            }
        }
    }
    ordered
}

/// Returns a copy of the test case with the label `mutation` added to the
/// given step. All other steps are untouched; marking twice is a no-op.
pub fn mark(tc: &TestCase, step: StepId) -> Result<TestCase, EngineError> {
    if step >= tc.steps.len() {
        return Err(EngineError::UnknownStep(step));
    }
    let mut marked = tc.clone();
    marked.steps[step].labels.insert(labels::MUTATION.to_string());
    Ok(marked)
}
