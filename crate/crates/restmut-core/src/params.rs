//! Shared vocabulary for extension params carried in [`EventParams::extra`].
//!
//! Matcher keys describe response predicates on wildcard output steps;
//! harness knobs tell the executor how to deliver a mutated event. Both are
//! plain string params so mutants stay self-contained JSON documents.
//!
//! [`EventParams::extra`]: crate::EventParams::extra

/// Response body must contain this substring (case-insensitive).
pub const BODY_CONTAINS: &str = "bodyContains";
/// Response body must not contain this substring (case-insensitive).
pub const BODY_NOT_CONTAINS: &str = "bodyNotContains";
/// Observation must not be a crash (HTTP 500 or transport reset).
pub const NOT_CRASH: &str = "notCrash";
/// Observation must be a transport-level rejection of the insecure replay.
pub const TRANSPORT_REJECTED: &str = "transportRejected";

/// Wait this many milliseconds before delivering the event.
pub const DELAY_MS: &str = "delayMs";
/// Deliver the event this many times in a tight window.
pub const REPEAT: &str = "repeat";
/// Replay the event over a plain/untrusted channel.
pub const INSECURE: &str = "insecure";
/// Shut the mock component down after this event has been served.
pub const SHUTDOWN_AFTER: &str = "shutdownAfter";
