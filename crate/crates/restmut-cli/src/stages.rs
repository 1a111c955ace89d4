//! The pipeline stages shared by the subcommands: ingest, mutate,
//! concretize, run, report.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use restmut_core::doc::{load, store};
use restmut_core::TestCase;
use restmut_engine::{mutate_all, Manifest, Strategy};
use restmut_exec::{concretize, run_suite_with_mock, ExecConfig, MockServer, SuiteReport, TestPlan};
use restmut_ingest::{build_test_cases, label_exchanges, parse_log, Bindings, LabelConfig, SessionKey};
use restmut_ops::{by_slug, catalog, default_ops, MutationOperator, OperatorConfig};

pub fn resolve_ops(names: Option<&[String]>) -> Result<Vec<&'static MutationOperator>> {
    match names {
        None => Ok(default_ops()),
        Some(list) if list.is_empty() => Ok(default_ops()),
        Some(list) => list
            .iter()
            .map(|slug| {
                by_slug(slug).ok_or_else(|| {
                    let known: Vec<&str> = catalog().iter().map(|op| op.slug).collect();
                    anyhow::anyhow!("unknown operator \"{slug}\"; known: {}", known.join(", "))
                })
            })
            .collect(),
    }
}

pub fn parse_session_key(raw: &str) -> Result<SessionKey> {
    if raw == "from" {
        Ok(SessionKey::ClientId)
    } else if let Some(name) = raw.strip_prefix("cookie:") {
        Ok(SessionKey::Cookie(name.to_string()))
    } else {
        bail!("session key must be \"from\" or \"cookie:<name>\", got \"{raw}\"");
    }
}

pub struct IngestSummary {
    pub test_cases: usize,
    pub skipped_lines: usize,
    pub warnings: Vec<String>,
}

/// Log file → labeled test cases + bindings, written to `out`.
pub fn ingest_stage(
    log_path: &Path,
    sut: &str,
    out: &Path,
    lenient: bool,
    session_key: &SessionKey,
    login_patterns: Option<&[String]>,
    token_keys: Option<&[String]>,
) -> Result<IngestSummary> {
    let bytes = std::fs::read(log_path).with_context(|| format!("reading log {}", log_path.display()))?;
    let parsed = parse_log(&bytes, lenient)?;
    let mut label_cfg = LabelConfig::new(sut);
    if let Some(p) = login_patterns {
        label_cfg.login_patterns = p.to_vec();
    }
    if let Some(k) = token_keys {
        label_cfg.token_keys = k.to_vec();
    }
    let labeled = label_exchanges(parsed.exchanges, &label_cfg);
    let outcome = build_test_cases(&labeled, &label_cfg, session_key);

    std::fs::create_dir_all(out)?;
    for (id, tc) in &outcome.test_cases {
        std::fs::write(out.join(format!("{id}.json")), store(tc))?;
    }
    let mut bindings_bytes = serde_json::to_vec_pretty(&outcome.bindings)?;
    bindings_bytes.push(b'\n');
    std::fs::write(out.join("bindings.json"), bindings_bytes)?;

    Ok(IngestSummary {
        test_cases: outcome.test_cases.len(),
        skipped_lines: parsed.skipped.len(),
        warnings: outcome.warnings,
    })
}

pub struct SourceSet {
    pub sources: Vec<(String, TestCase)>,
    pub bindings: Bindings,
}

/// Loads every test-case JSON in a directory (sorted by file name), plus
/// bindings.json when present.
pub fn load_sources(dir: &Path) -> Result<SourceSet> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".json") && n != "manifest.json" && n != "bindings.json")
        .collect();
    names.sort();
    let mut sources = Vec::with_capacity(names.len());
    for name in names {
        let path = dir.join(&name);
        let bytes = std::fs::read(&path)?;
        let tc = load(&bytes).with_context(|| format!("loading {}", path.display()))?;
        let id = name.trim_end_matches(".json").to_string();
        sources.push((id, tc));
    }
    let bindings = read_bindings(dir)?.unwrap_or_else(|| Bindings {
        schema: restmut_ingest::BINDINGS_SCHEMA.to_string(),
        ..Default::default()
    });
    Ok(SourceSet { sources, bindings })
}

fn read_bindings(dir: &Path) -> Result<Option<Bindings>> {
    let path = dir.join("bindings.json");
    if !path.exists() {
        return Ok(None);
    }
    let bytes = std::fs::read(&path)?;
    Ok(Some(serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?))
}

pub struct MutateSummary {
    pub manifest: Manifest,
    pub rejected: Vec<(String, String)>,
}

/// Test cases → mutants + manifest, written to `out`. The bindings file is
/// carried along so later stages can resolve wildcards.
pub fn mutate_stage(
    in_dir: &Path,
    out: &Path,
    ops: &[&'static MutationOperator],
    strategy: &Strategy,
    seed: u64,
    op_cfg: &OperatorConfig,
) -> Result<MutateSummary> {
    let set = load_sources(in_dir)?;
    if set.sources.is_empty() {
        bail!("no test cases found in {}", in_dir.display());
    }
    let (outcome, manifest) = mutate_all(&set.sources, ops, strategy, op_cfg, seed, &set.bindings.tokens);

    std::fs::create_dir_all(out)?;
    for record in &outcome.records {
        std::fs::write(out.join(format!("{}.json", record.id)), store(&record.mutant))?;
    }
    std::fs::write(out.join("manifest.json"), manifest.to_bytes())?;
    let mut bindings_bytes = serde_json::to_vec_pretty(&set.bindings)?;
    bindings_bytes.push(b'\n');
    std::fs::write(out.join("bindings.json"), bindings_bytes)?;

    Ok(MutateSummary {
        manifest,
        rejected: outcome.rejected,
    })
}

/// Mutants + manifest → executable plans, written to `<dir>/plans/` and
/// returned in manifest order.
pub fn concretize_stage(mutants_dir: &Path, plans_out: &Path) -> Result<Vec<TestPlan>> {
    let manifest_path = mutants_dir.join("manifest.json");
    let manifest = Manifest::from_bytes(&std::fs::read(&manifest_path).with_context(|| {
        format!("reading {} (run `restmut mutate` first)", manifest_path.display())
    })?)?;
    let bindings = read_bindings(mutants_dir)?.unwrap_or_default();

    std::fs::create_dir_all(plans_out)?;
    let mut plans = Vec::with_capacity(manifest.records.len());
    for record in &manifest.records {
        let path = mutants_dir.join(&record.file);
        let mutant = load(&std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?)
            .with_context(|| format!("loading mutant {}", record.id))?;
        let plan = concretize(&mutant, &record.origin.operator, &record.id, &bindings.values, manifest.seed)
            .with_context(|| format!("concretizing mutant {}", record.id))?;
        std::fs::write(plans_out.join(format!("{}.plan.json", record.id)), plan.to_bytes())?;
        plans.push(plan);
    }
    Ok(plans)
}

/// Loads pre-built plan files from a directory, sorted by file name.
pub fn load_plans(dir: &Path) -> Result<Vec<TestPlan>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".plan.json"))
        .collect();
    names.sort();
    let mut plans = Vec::with_capacity(names.len());
    for name in names {
        let bytes = std::fs::read(dir.join(&name))?;
        plans.push(TestPlan::from_bytes(&bytes).with_context(|| format!("parsing plan {name}"))?);
    }
    Ok(plans)
}

/// Executes plans against the SUT with one shared mock listener.
pub async fn run_stage(plans: &[TestPlan], sut_url: &str, cfg: &ExecConfig) -> Result<SuiteReport> {
    let mock = MockServer::start(cfg.mock_port)
        .await
        .with_context(|| format!("binding mock listener on port {}", cfg.mock_port))?;
    eprintln!("mock listener at {} (configure the SUT to reach dependees there)", mock.url());
    Ok(run_suite_with_mock(plans, sut_url, &mock, cfg).await)
}

/// Prints the table and writes the machine artifacts.
pub fn report_stage(report: &SuiteReport, json_out: Option<&Path>, junit_out: Option<&Path>) -> Result<()> {
    print!("{}", report.render_table());
    for result in &report.results {
        if let Some(warning) = &result.warning {
            println!("warning [{} {}]: {warning}", result.operator, result.mutant_id);
        }
    }
    if let Some(path) = json_out {
        std::fs::write(path, report.to_bytes())?;
    }
    if let Some(path) = junit_out {
        std::fs::write(path, report.to_junit())?;
    }
    Ok(())
}


pub fn parse_mock_port(raw: &str) -> Result<u16> {
    if raw == "auto" {
        Ok(0)
    } else {
        raw.parse().with_context(|| format!("mock port must be \"auto\" or a number, got \"{raw}\""))
    }
}

pub fn parse_strategy(kind: &str, n: u32) -> Result<Strategy> {
    Strategy::parse(kind, n).ok_or_else(|| anyhow::anyhow!("strategy must be s0, s1 or s2, got \"{kind}\""))
}

/// Per-operator breakdown of mutate results for the console.
pub fn mutate_table(manifest: &Manifest) -> String {
    let mut out = String::new();
    let mut per_source: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &manifest.records {
        *per_source.entry(r.origin.source.as_str()).or_default() += 1;
    }
    out.push_str(&format!(
        "{} mutants from {} test cases (strategy {}, seed {})\n",
        manifest.total,
        manifest.sources.len(),
        manifest.strategy,
        manifest.seed
    ));
    for (op, count) in &manifest.per_operator {
        out.push_str(&format!("  {op:<24} {count}\n"));
    }
    out
}
