//! Security mutation operators for HTTP test cases.
//!
//! An operator is a (condition, change, expected) triple: the condition
//! restricts which test steps it applies to, change rewrites the one step
//! labeled `mutation` (pruning the now-irrelevant suffix), and expected
//! appends the response branch that encodes the secure reaction, leading to
//! `pass`. The catalog groups the operators with their CAPEC/CWE/guide
//! grounding and is the single source of truth for their order.

mod catalog;
mod payloads;
mod transform;

pub use catalog::{by_slug, catalog, default_ops, MutationOperator, OpError, Variant};
pub use payloads::{parse_payloads, Payloads};
pub use transform::token_values;

/// Tunable operator parameters with the documented defaults: repeat counts,
/// delays, payload contents — everything the attack descriptions leave
/// unquantified is pinned here and overridable.
#[derive(Debug, Clone)]
pub struct OperatorConfig {
    /// Header/cookie/body field names treated as tokens.
    pub token_keys: Vec<String>,
    /// How many times Stress Testing replays the mutated event.
    pub stress_repeat: u32,
    /// How many times the wrong-credential login is replayed.
    pub failed_login_repeat: u32,
    /// Delay inserted by Session Management before the mutated event:
    /// session TTL hint + 60 s by default.
    pub session_delay_ms: u64,
    /// Body size used by Buffer Overflow (1 MiB by default).
    pub overflow_size: usize,
    /// Known-expired token; without one, Token Alteration only generates its
    /// other two variants.
    pub expired_token: Option<String>,
    /// Component id used by the SSRF operator as the unknown sender.
    pub unknown_component: String,
    /// Paths probed by Information Leakage; the first entry is used.
    pub sensitive_paths: Vec<String>,
    pub payloads: Payloads,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            token_keys: ["authorization", "token", "access_token", "sessionid"]
                .map(String::from)
                .to_vec(),
            stress_repeat: 100,
            failed_login_repeat: 3,
            session_delay_ms: 300_000 + 60_000,
            overflow_size: 1 << 20,
            expired_token: None,
            unknown_component: "unknown-service".into(),
            sensitive_paths: ["/admin", "/config", "/users", "/secrets"]
                .map(String::from)
                .to_vec(),
            payloads: Payloads::default(),
        }
    }
}

/// Everything an operator application may draw on besides the test case:
/// configuration, the run seed (tie-breaking and synthesized values), and
/// token values recorded from other sessions.
#[derive(Debug, Clone, Copy)]
pub struct MutationContext<'a> {
    pub config: &'a OperatorConfig,
    pub seed: u64,
    pub foreign_tokens: &'a [String],
}
