//! The mutation loop and its selection strategies.

use std::collections::BTreeSet;

use restmut_core::doc::store;
use restmut_core::validate::validate;
use restmut_core::{StepId, TestCase};
use restmut_ops::{MutationContext, MutationOperator, OperatorConfig, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compl::compl;
use crate::mutable::{mark, mutable_steps_on_pass, EngineError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    S0,
    S1,
    S2,
}

/// Mutant generation strategy: S0 emits every possible mutant, S1 at most
/// one per distinct event (canonical key) per test case, S2 at most `n` per
/// test case (default 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub n: u32,
}

impl Strategy {
    pub fn s0() -> Self {
        Strategy { kind: StrategyKind::S0, n: 0 }
    }

    pub fn s1() -> Self {
        Strategy { kind: StrategyKind::S1, n: 0 }
    }

    pub fn s2(n: u32) -> Self {
        Strategy { kind: StrategyKind::S2, n }
    }

    pub fn parse(kind: &str, n: u32) -> Option<Self> {
        match kind.to_ascii_lowercase().as_str() {
            "s0" => Some(Self::s0()),
            "s1" => Some(Self::s1()),
            "s2" => Some(Self::s2(n)),
            _ => None,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self.kind {
            StrategyKind::S0 => "s0",
            StrategyKind::S1 => "s1",
            StrategyKind::S2 => "s2",
        }
    }
}

/// Where a mutant came from: enough to reproduce it exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Origin {
    pub source: String,
    pub step: StepId,
    pub operator: String,
    pub variant: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutantRecord {
    /// Content hash of the origin tuple and the serialized mutant; stable
    /// across runs for deduplication and file naming.
    pub id: String,
    pub origin: Origin,
    pub mutant: TestCase,
}

#[derive(Debug, Default)]
pub struct MutateOutcome {
    pub records: Vec<MutantRecord>,
    /// (test-case id, reason) for sources that were rejected outright.
    pub rejected: Vec<(String, String)>,
}

/// Per-test-case selection tallies.
struct Tallies {
    emitted: u32,
    seen_events: BTreeSet<String>,
}

/// The selection predicate: called before each candidate mutant, returns
/// whether the strategy still allows emitting it.
fn selection(strategy: &Strategy, tallies: &Tallies, event_key: &str) -> bool {
    match strategy.kind {
        StrategyKind::S0 => true,
        StrategyKind::S1 => !tallies.seen_events.contains(event_key),
        StrategyKind::S2 => tallies.emitted < strategy.n,
    }
}

/// Applies one operator across a test-case set. Each source must be valid
/// (invalid ones are rejected with their id); every mutable step on a
/// pass-ending sequence is considered in canonical order, and each operator
/// variant yields one candidate mutant, gated by the strategy. Deterministic
/// given inputs and seed.
pub fn mutate(
    sources: &[(String, TestCase)],
    op: &MutationOperator,
    strategy: &Strategy,
    config: &OperatorConfig,
    seed: u64,
    extra_tokens: &[String],
) -> MutateOutcome {
    let mut outcome = MutateOutcome::default();
    let all_tokens = collect_tokens(sources, config, extra_tokens);

    for (tc_id, tc) in sources {
        let report = validate(tc);
        if !report.is_valid() {
            outcome.rejected.push((tc_id.clone(), report.to_string()));
            continue;
        }
        let own_tokens = test_case_tokens(tc, config);
        let foreign: Vec<String> = all_tokens
            .iter()
            .filter(|t| !own_tokens.contains(*t))
            .cloned()
            .collect();
        let ctx = MutationContext { config, seed, foreign_tokens: &foreign };

        let mut tallies = Tallies { emitted: 0, seen_events: BTreeSet::new() };
        for step in mutable_steps_on_pass(op, tc) {
            let event_key = format!("{:?}", tc.steps[step].event.as_ref().map(|e| e.key()));
            for variant in op.variants(&ctx) {
                if !selection(strategy, &tallies, &event_key) {
                    continue;
                }
                match mutate_marked(tc, tc_id, step, op, &variant, &ctx) {
                    Ok(record) => {
                        outcome.records.push(record);
                        tallies.emitted += 1;
                        tallies.seen_events.insert(event_key.clone());
                    }
                    Err(err) => outcome.rejected.push((tc_id.clone(), err.to_string())),
                }
            }
        }
    }
    outcome
}

/// One full mark → change → expected → compl application on a chosen step.
pub fn mutate_marked(
    tc: &TestCase,
    tc_id: &str,
    step: StepId,
    op: &MutationOperator,
    variant: &Variant,
    ctx: &MutationContext,
) -> Result<MutantRecord, EngineError> {
    let marked = mark(tc, step)?;
    let pre = op
        .change(marked, variant, ctx)
        .map_err(|e| EngineError::InvalidSource { id: tc_id.to_string(), report: e.to_string() })?;
    let expected = op
        .expected(pre, ctx)
        .map_err(|e| EngineError::InvalidSource { id: tc_id.to_string(), report: e.to_string() })?;
    let mutant = compl(expected);
    let origin = Origin {
        source: tc_id.to_string(),
        step,
        operator: op.slug.to_string(),
        variant: variant.name.to_string(),
        seed: ctx.seed,
    };
    let id = mutant_id(&origin, &mutant);
    Ok(MutantRecord { id, origin, mutant })
}

/// Applies several operators in order, returning all records plus a manifest.
pub fn mutate_all(
    sources: &[(String, TestCase)],
    ops: &[&MutationOperator],
    strategy: &Strategy,
    config: &OperatorConfig,
    seed: u64,
    extra_tokens: &[String],
) -> (MutateOutcome, crate::Manifest) {
    let mut all = MutateOutcome::default();
    for op in ops {
        let mut one = mutate(sources, op, strategy, config, seed, extra_tokens);
        all.records.append(&mut one.records);
        all.rejected.append(&mut one.rejected);
    }
    let manifest = crate::Manifest::from_records(&all.records, ops, strategy, seed, sources);
    (all, manifest)
}

fn mutant_id(origin: &Origin, mutant: &TestCase) -> String {
    let mut hasher = Sha256::new();
    hasher.update(origin.source.as_bytes());
    hasher.update(origin.step.to_le_bytes());
    hasher.update(origin.operator.as_bytes());
    hasher.update(origin.variant.as_bytes());
    hasher.update(origin.seed.to_le_bytes());
    hasher.update(store(mutant));
    let digest = hasher.finalize();
    hex::encode(&digest[..8])
}

fn test_case_tokens(tc: &TestCase, config: &OperatorConfig) -> Vec<String> {
    let mut tokens = Vec::new();
    for step in &tc.steps {
        if let Some(event) = &step.event {
            for t in restmut_ops::token_values(event, &config.token_keys) {
                if !tokens.contains(&t) {
                    tokens.push(t);
                }
            }
        }
    }
    tokens
}

fn collect_tokens(sources: &[(String, TestCase)], config: &OperatorConfig, extra: &[String]) -> Vec<String> {
    let mut tokens: Vec<String> = extra.to_vec();
    for (_, tc) in sources {
        for t in test_case_tokens(tc, config) {
            if !tokens.contains(&t) {
                tokens.push(t);
            }
        }
    }
    tokens
}
