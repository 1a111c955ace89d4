//! Mutant-set manifest: origin records and per-operator counts.

use std::collections::BTreeMap;

use restmut_core::TestCase;
use restmut_ops::MutationOperator;
use serde::{Deserialize, Serialize};

use crate::mutate::{MutantRecord, Origin, Strategy};

pub const MANIFEST_SCHEMA: &str = "manifest/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestRecord {
    pub id: String,
    pub file: String,
    #[serde(flatten)]
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub schema: String,
    pub seed: u64,
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    pub operators: Vec<String>,
    pub sources: Vec<String>,
    pub per_operator: BTreeMap<String, usize>,
    pub total: usize,
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn from_records(
        records: &[MutantRecord],
        ops: &[&MutationOperator],
        strategy: &Strategy,
        seed: u64,
        sources: &[(String, TestCase)],
    ) -> Self {
        let mut per_operator: BTreeMap<String, usize> = ops.iter().map(|op| (op.slug.to_string(), 0)).collect();
        for r in records {
            *per_operator.entry(r.origin.operator.clone()).or_default() += 1;
        }
        Manifest {
            schema: MANIFEST_SCHEMA.to_string(),
            seed,
            strategy: strategy.kind_str().to_string(),
            n: matches!(strategy.kind, crate::StrategyKind::S2).then_some(strategy.n),
            operators: ops.iter().map(|op| op.slug.to_string()).collect(),
            sources: sources.iter().map(|(id, _)| id.clone()).collect(),
            per_operator,
            total: records.len(),
            records: records
                .iter()
                .map(|r| ManifestRecord {
                    id: r.id.clone(),
                    file: format!("{}.json", r.id),
                    origin: r.origin.clone(),
                })
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest serialization cannot fail");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}
