//! restmut: mutation-based security testing of RESTful APIs in isolation.
//!
//! Test cases (hand-written JSON or ingested from HTTP exchange logs) are
//! mutated by security operators into new test cases with mock components,
//! executed against the service under test, and reported per verdict.

mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use restmut_exec::fixtures::{spawn_demo_sut, DemoConfig, DemoMode};
use restmut_exec::ExecConfig;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "restmut", version, about = "Mutation-based security testing of RESTful APIs in isolation")]
struct Cli {
    /// Seed for every randomized choice (mutant ordering ties, wildcard
    /// resolution).
    #[arg(long, global = true, env = "RESTMUT_SEED")]
    seed: Option<u64>,
    /// JSON config file mirroring the flags; flags win on conflict.
    #[arg(long, global = true, env = "RESTMUT_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MutateArgs {
    /// Directory of test-case JSON files (plus optional bindings.json).
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    /// Comma-separated operator slugs; defaults to
    /// verb-change,path-manip,session-mgmt,token-removal.
    #[arg(long, value_delimiter = ',')]
    ops: Option<Vec<String>>,
    /// Selection strategy: s0 (all), s1 (one per event), s2 (at most n per
    /// test case).
    #[arg(long, default_value = "s0")]
    strategy: String,
    /// Mutant cap per test case under s2.
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Mutants directory (with manifest.json) or a directory of
    /// *.plan.json files.
    #[arg(long, value_name = "DIR")]
    plans: PathBuf,
    /// Base URL of the service under test.
    #[arg(long = "sut", value_name = "URL")]
    sut_url: Option<String>,
    /// Mock listener port: "auto" for ephemeral, or a fixed port the SUT's
    /// dependee endpoints point at.
    #[arg(long, default_value = "auto")]
    mock_port: String,
    /// Quiescence timeout: silence longer than this is a missing reaction.
    #[arg(long, default_value_t = 5000)]
    timeout_ms: u64,
    /// Where the report JSON goes.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Extra export format; "junit-xml" writes XML next to the report (or
    /// ./junit.xml without --report).
    #[arg(long, value_name = "FORMAT")]
    emit: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an HTTP exchange log (JSONL) into test cases.
    Ingest {
        #[arg(long, value_name = "FILE")]
        log: PathBuf,
        /// Component id of the service under test.
        #[arg(long)]
        sut: String,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Skip malformed lines instead of failing.
        #[arg(long)]
        lenient: bool,
        /// Session grouping: "from" (client id) or "cookie:<name>".
        #[arg(long, default_value = "from")]
        session_key: String,
    },
    /// Apply mutation operators to test cases, producing mutants.
    Mutate(MutateArgs),
    /// Concretize mutants and execute them against the service under test.
    Run(RunArgs),
    /// Render a stored report as a table (and optionally re-emit JSON/JUnit).
    Report {
        #[arg(long, value_name = "FILE")]
        results: PathBuf,
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        junit: Option<PathBuf>,
    },
    /// ingest → mutate → concretize → run → report in one go.
    Pipeline {
        /// Exchange log to ingest; omit when --in provides test cases.
        #[arg(long, value_name = "FILE")]
        log: Option<PathBuf>,
        /// Pre-existing test-case directory (alternative to --log).
        #[arg(long = "in", value_name = "DIR")]
        input: Option<PathBuf>,
        #[arg(long)]
        sut: String,
        /// Base URL of the running service under test.
        #[arg(long = "sut-url", value_name = "URL")]
        sut_url: Option<String>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        ops: Option<Vec<String>>,
        #[arg(long, default_value = "s0")]
        strategy: String,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long)]
        lenient: bool,
        #[arg(long, default_value = "from")]
        session_key: String,
        #[arg(long, default_value = "auto")]
        mock_port: String,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
        /// Write mutants and plans but issue no HTTP.
        #[arg(long)]
        dry_run: bool,
        #[arg(long, value_name = "FILE")]
        junit: Option<PathBuf>,
    },
    /// Start a demo service under test (secure or deliberately vulnerable).
    Fixtures {
        #[arg(long, default_value = "secure")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        port: u16,
        /// Where the demo service reaches its risk-check dependee (usually
        /// the mock listener URL).
        #[arg(long, value_name = "URL")]
        dependee_url: Option<String>,
        /// Secure mode terminates sessions older than this.
        #[arg(long, default_value_t = 600_000)]
        session_ttl_ms: u64,
    },
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli).await {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

async fn dispatch(cli: Cli) -> Result<ExitCode> {
    let mut run_cfg = RunConfig {
        seed: cli.seed,
        ..Default::default()
    };
    if let Some(path) = &cli.config {
        run_cfg = run_cfg.merged_over(RunConfig::load(path)?);
    }
    let seed = run_cfg.seed.unwrap_or(0);

    match cli.command {
        Command::Ingest { log, sut, out, lenient, session_key } => {
            let key = stages::parse_session_key(&session_key)?;
            let summary = stages::ingest_stage(
                &log,
                &sut,
                &out,
                lenient,
                &key,
                run_cfg.login_patterns.as_deref(),
                run_cfg.token_keys.as_deref(),
            )?;
            for warning in &summary.warnings {
                eprintln!("warning: {warning}");
            }
            if summary.skipped_lines > 0 {
                eprintln!("warning: {} malformed lines skipped", summary.skipped_lines);
            }
            println!("{} test cases written to {}", summary.test_cases, out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Mutate(args) => {
            let summary = mutate(&args, &run_cfg, seed)?;
            print!("{}", stages::mutate_table(&summary.manifest));
            for (id, reason) in &summary.rejected {
                eprintln!("rejected {id}: {reason}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => {
            let report = run(&args, &run_cfg).await?;
            let junit_path = match args.emit.as_deref() {
                Some("junit-xml") => Some(
                    args.report
                        .as_ref()
                        .map(|p| p.with_extension("xml"))
                        .unwrap_or_else(|| PathBuf::from("junit.xml")),
                ),
                Some(other) => bail!("unsupported --emit format \"{other}\"; supported: junit-xml"),
                None => None,
            };
            stages::report_stage(&report, args.report.as_deref(), junit_path.as_deref())?;
            Ok(ExitCode::from(report.exit_code() as u8))
        }
        Command::Report { results, json, junit } => {
            let bytes = std::fs::read(&results).with_context(|| format!("reading {}", results.display()))?;
            let report = restmut_exec::SuiteReport::from_bytes(&bytes)
                .with_context(|| format!("parsing {}", results.display()))?;
            stages::report_stage(&report, json.as_deref(), junit.as_deref())?;
            Ok(ExitCode::from(report.exit_code() as u8))
        }
        Command::Pipeline {
            log,
            input,
            sut,
            sut_url,
            out,
            ops,
            strategy,
            n,
            lenient,
            session_key,
            mock_port,
            timeout_ms,
            dry_run,
            junit,
        } => {
            // Configuration errors must surface before any work happens.
            let effective_sut_url = sut_url.or_else(|| run_cfg.sut_url.clone());
            if !dry_run && effective_sut_url.is_none() {
                bail!("--sut-url is required unless --dry-run is given");
            }

            let testcases_dir = match (&log, &input) {
                (Some(log), _) => {
                    let dir = out.join("testcases");
                    let key = stages::parse_session_key(&session_key)?;
                    let summary = stages::ingest_stage(
                        log,
                        &sut,
                        &dir,
                        lenient,
                        &key,
                        run_cfg.login_patterns.as_deref(),
                        run_cfg.token_keys.as_deref(),
                    )?;
                    for warning in &summary.warnings {
                        eprintln!("warning: {warning}");
                    }
                    println!("ingest: {} test cases", summary.test_cases);
                    dir
                }
                (None, Some(dir)) => dir.clone(),
                (None, None) => bail!("pipeline needs --log or --in"),
            };

            let mutants_dir = out.join("mutants");
            let mutate_args = MutateArgs {
                input: testcases_dir,
                ops: ops.or_else(|| run_cfg.ops.clone()),
                strategy,
                n,
                out: mutants_dir.clone(),
            };
            let summary = mutate(&mutate_args, &run_cfg, seed)?;
            print!("{}", stages::mutate_table(&summary.manifest));

            let plans = stages::concretize_stage(&mutants_dir, &out.join("plans"))?;
            println!("concretize: {} plans", plans.len());
            if dry_run {
                println!("dry run: skipping execution");
                return Ok(ExitCode::SUCCESS);
            }

            let exec_cfg = ExecConfig {
                quiescence_timeout_ms: run_cfg.timeout_ms.unwrap_or(timeout_ms),
                mock_port: stages::parse_mock_port(&run_cfg.mock_port.clone().unwrap_or(mock_port))?,
            };
            let report = stages::run_stage(&plans, effective_sut_url.as_deref().unwrap(), &exec_cfg).await?;
            std::fs::write(out.join("report.json"), report.to_bytes())?;
            stages::report_stage(&report, None, junit.as_deref())?;
            Ok(ExitCode::from(report.exit_code() as u8))
        }
        Command::Fixtures { mode, port, dependee_url, session_ttl_ms } => {
            let mode = DemoMode::parse(&mode)
                .ok_or_else(|| anyhow::anyhow!("mode must be secure or vulnerable, got \"{mode}\""))?;
            let sut = spawn_demo_sut(
                DemoConfig {
                    mode,
                    dependee_url,
                    session_ttl_ms,
                    ..Default::default()
                },
                port,
            )
            .await?;
            println!("demo service ({mode:?}) listening at {}", sut.url());
            println!("endpoints: POST /login, GET /checkAccountRisk — press Ctrl-C to stop");
            tokio::signal::ctrl_c().await?;
            sut.stop();
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn mutate(args: &MutateArgs, run_cfg: &RunConfig, seed: u64) -> Result<stages::MutateSummary> {
    let ops = stages::resolve_ops(args.ops.as_deref())?;
    let strategy = stages::parse_strategy(
        &run_cfg.strategy.clone().unwrap_or_else(|| args.strategy.clone()),
        run_cfg.n.unwrap_or(args.n),
    )?;
    let op_cfg = run_cfg.operator_config()?;
    stages::mutate_stage(&args.input, &args.out, &ops, &strategy, seed, &op_cfg)
}

async fn run(args: &RunArgs, run_cfg: &RunConfig) -> Result<restmut_exec::SuiteReport> {
    let sut_url = args
        .sut_url
        .clone()
        .or_else(|| run_cfg.sut_url.clone())
        .ok_or_else(|| anyhow::anyhow!("--sut <URL> is required"))?;
    let plans = if args.plans.join("manifest.json").exists() {
        stages::concretize_stage(&args.plans, &args.plans.join("plans"))?
    } else {
        stages::load_plans(&args.plans)?
    };
    if plans.is_empty() {
        bail!("no plans found under {}", args.plans.display());
    }
    let exec_cfg = ExecConfig {
        quiescence_timeout_ms: run_cfg.timeout_ms.unwrap_or(args.timeout_ms),
        mock_port: stages::parse_mock_port(&run_cfg.mock_port.clone().unwrap_or_else(|| args.mock_port.clone()))?,
    };
    stages::run_stage(&plans, &sut_url, &exec_cfg).await
}
