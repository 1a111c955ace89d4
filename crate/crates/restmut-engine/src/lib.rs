//! Mutant generation engine.
//!
//! Given valid test cases and a mutation operator, the engine finds the
//! mutable steps on pass-ending sequences, marks one at a time, applies the
//! operator's change and expected functions, completes the result (wildcard
//! branches to `inc`, quiescence branches to `fail`) and collects the
//! mutants, subject to a selection strategy that caps how many are emitted.

mod compl;
mod manifest;
mod mutable;
mod mutate;

pub use compl::{compl, is_completed};
pub use manifest::{Manifest, ManifestRecord, MANIFEST_SCHEMA};
pub use mutable::{is_mutable, mark, mutable_steps, mutable_steps_on_pass, EngineError};
pub use mutate::{mutate, mutate_all, mutate_marked, MutantRecord, MutateOutcome, Origin, Strategy, StrategyKind};
