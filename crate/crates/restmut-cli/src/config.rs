//! Run configuration: a JSON file mirroring the CLI knobs, overridden by
//! flags. A stored config plus the same inputs and seed reproduces a run
//! byte-identically (timestamps excluded — reports carry durations, mutants
//! and manifests do not).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use restmut_ops::{parse_payloads, OperatorConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub strategy: Option<String>,
    pub n: Option<u32>,
    pub ops: Option<Vec<String>>,
    pub sut_id: Option<String>,
    pub sut_url: Option<String>,
    pub timeout_ms: Option<u64>,
    pub mock_port: Option<String>,
    pub session_delay_ms: Option<u64>,
    pub stress_repeat: Option<u32>,
    pub failed_login_repeat: Option<u32>,
    pub overflow_size: Option<usize>,
    pub expired_token: Option<String>,
    pub unknown_component: Option<String>,
    pub token_keys: Option<Vec<String>>,
    pub login_patterns: Option<Vec<String>>,
    pub sensitive_paths: Option<Vec<String>>,
    /// Directory holding xss.txt / sql.txt / traversal.txt /
    /// unauthorized.txt overrides.
    pub payloads_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let bytes = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_slice(&bytes).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Builds the operator configuration with this run's overrides applied.
    pub fn operator_config(&self) -> Result<OperatorConfig> {
        let mut cfg = OperatorConfig::default();
        if let Some(v) = self.session_delay_ms {
            cfg.session_delay_ms = v;
        }
        if let Some(v) = self.stress_repeat {
            cfg.stress_repeat = v;
        }
        if let Some(v) = self.failed_login_repeat {
            cfg.failed_login_repeat = v;
        }
        if let Some(v) = self.overflow_size {
            cfg.overflow_size = v;
        }
        if let Some(v) = &self.expired_token {
            cfg.expired_token = Some(v.clone());
        }
        if let Some(v) = &self.unknown_component {
            cfg.unknown_component = v.clone();
        }
        if let Some(v) = &self.token_keys {
            cfg.token_keys = v.clone();
        }
        if let Some(v) = &self.sensitive_paths {
            cfg.sensitive_paths = v.clone();
        }
        if let Some(dir) = &self.payloads_dir {
            for (name, slot) in [
                ("xss.txt", &mut cfg.payloads.xss),
                ("sql.txt", &mut cfg.payloads.sql),
                ("traversal.txt", &mut cfg.payloads.traversal),
                ("unauthorized.txt", &mut cfg.payloads.unauthorized),
            ] {
                let path = dir.join(name);
                if path.exists() {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading payloads {}", path.display()))?;
                    let payloads = parse_payloads(&text);
                    if payloads.is_empty() {
                        bail!("payload dictionary {} is empty", path.display());
                    }
                    *slot = payloads;
                }
            }
        }
        Ok(cfg)
    }

    /// Merges a config file under CLI flags: any field already set on `self`
    /// wins.
    pub fn merged_over(mut self, base: RunConfig) -> RunConfig {
        macro_rules! fill {
            ($($field:ident),* $(,)?) => {
                $(if self.$field.is_none() { self.$field = base.$field; })*
            };
        }
        fill!(
            seed, strategy, n, ops, sut_id, sut_url, timeout_ms, mock_port, session_delay_ms,
            stress_repeat, failed_login_repeat, overflow_size, expired_token, unknown_component,
            token_keys, login_patterns, sensitive_paths, payloads_dir,
        );
        self
    }
}
