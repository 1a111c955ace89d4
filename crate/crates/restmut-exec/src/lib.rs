//! Concretization and execution of mutants.
//!
//! A completed mutant is turned into an executable test plan: driver actions
//! (send, expect, delays), response matchers mapping every observation to a
//! verdict, and rules for the embedded mock server that stands in for the
//! dependee services. The runner drives the service under test over HTTP,
//! evaluates verdicts (including quiescence), and verifies that the mocks
//! were called exactly as the mutant prescribes.

pub mod concretize;
pub mod fixtures;
pub mod httpd;
pub mod mock;
pub mod plan;
pub mod report;
pub mod runner;

pub use concretize::{concretize, ConcretizeError};
pub use mock::{MockMismatch, MockServer, MockVerification};
pub use plan::{DriverAction, ExpectAction, MatchOutcome, MockRule, ResponseMatcher, SendAction, TestPlan, PLAN_SCHEMA};
pub use report::{OpStats, SuiteReport, Summary, TestResult, REPORT_SCHEMA};
pub use runner::{run_plan, run_suite, run_suite_with_mock, ExecConfig, Observation};
