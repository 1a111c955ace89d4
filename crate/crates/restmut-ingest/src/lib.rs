//! Log ingestion: turns HTTP exchange logs (JSONL) into labeled test cases.
//!
//! This is the input path used when hand-written test-case JSON is absent:
//! parse the log, pair requests with responses, recognize behaviors (login,
//! token creation/usage, crashes, dependee traffic), split into sessions and
//! emit one linear pass-ending test case per session. No model learning: a
//! session becomes a strictly linear tree.

mod label;
mod log;
mod sessions;

pub use label::{label_exchanges, LabelConfig};
pub use log::{parse_log, ExchangeKind, HttpExchange, LogError, ParsedLog};
pub use sessions::{build_test_cases, Bindings, BuildOutcome, SessionKey};

pub const BINDINGS_SCHEMA: &str = "bindings/1";
