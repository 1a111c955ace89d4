//! Test-case model for HTTP-level security testing.
//!
//! A test case is a deterministic input/output transition system with a tree
//! shape: states, labeled transitions carrying HTTP events (or the quiescence
//! marker), and three verdict sink states (`pass`, `fail`, `inc`). This crate
//! holds the model itself, its structural invariants, traversal helpers and
//! the versioned JSON document format; mutation and execution live in the
//! crates built on top of it.

mod event;
mod testcase;

pub mod doc;
pub mod gen;
pub mod params;
pub mod traverse;
pub mod validate;

pub use event::{Direction, Event, EventParams, Headers, WILDCARD};
pub use testcase::{labels, StateId, StepId, TestCase, TestStep, Verdict, VerdictStates};
