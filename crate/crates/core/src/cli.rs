//! The `sentinel` command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::adapters::{command_lines, discover_runtimes, execute, ExecutionMode, RuntimeConfig, RuntimeSpec};
use crate::category::Category;
use crate::corpus::{builtin_corpus, load_manifest, materialize_fixture, merge_cases, verify_corpus, TestCase};
use crate::oracle::judge_single;
use crate::pipeline::{run_pipeline, RunOptions};
use crate::report::{aggregate, render_json, render_markdown, Metadata, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BUGS: i32 = 1;
pub const EXIT_HARNESS: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sentinel",
    version,
    about = "Differential bug detection for WebAssembly runtimes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct CorpusArgs {
    /// Extra case manifest (repeatable).
    #[arg(long = "manifest", value_name = "PATH")]
    pub manifests: Vec<PathBuf>,
    /// Leave out the builtin corpus.
    #[arg(long)]
    pub no_builtin: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List cases.
    List {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Only these categories (e.g. B.1).
        #[arg(long = "category", value_name = "ID")]
        categories: Vec<Category>,
    },
    /// Check every case against the toolkit and the reference evaluator.
    Validate {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Run cases on the installed runtimes and report.
    Run {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long = "runtime", value_name = "NAME")]
        runtimes: Vec<String>,
        #[arg(long = "mode", value_name = "MODE")]
        modes: Vec<ExecutionMode>,
        #[arg(long = "category", value_name = "ID")]
        categories: Vec<Category>,
        #[arg(long = "case", value_name = "ID")]
        cases: Vec<String>,
        /// Per-execution timeout in seconds.
        #[arg(long, value_name = "SECS", default_value_t = 10.0)]
        timeout: f64,
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
        /// Runtime config; defaults to $SENTINEL_RUNTIMES, then the shipped one.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// File, or directory receiving report.md and report.json.
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
    /// Re-render a saved JSON report.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Replay one case on one runtime, printing the exact command lines.
    Repro {
        case: String,
        #[arg(long, value_name = "NAME")]
        runtime: String,
        #[arg(long, value_name = "MODE")]
        mode: Option<ExecutionMode>,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_name = "SECS", default_value_t = 10.0)]
        timeout: f64,
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Keep the sandbox directory for inspection.
        #[arg(long)]
        keep: bool,
    },
}

struct HarnessError(String);

impl<E: std::fmt::Display> From<E> for HarnessError {
    fn from(e: E) -> Self {
        HarnessError(e.to_string())
    }
}

fn load_cases(args: &CorpusArgs) -> Result<Vec<TestCase>, HarnessError> {
    let mut cases = if args.no_builtin { Vec::new() } else { builtin_corpus() };
    for m in &args.manifests {
        let extra = load_manifest(m).map_err(|e| HarnessError(format!("{}: {e}", m.display())))?;
        cases = merge_cases(cases, extra)?;
    }
    Ok(cases)
}

fn timeout_of(secs: f64) -> Result<Duration, HarnessError> {
    if secs.is_finite() && secs > 0.0 {
        Ok(Duration::from_secs_f64(secs))
    } else {
        Err(HarnessError(format!("timeout must be positive, got {secs}")))
    }
}

fn write_output(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError(format!("{}: {e}", path.display())))
}

fn emit(report: &Report, format: Format, output: Option<&Path>) -> Result<(), HarnessError> {
    let render = |f: Format| match f {
        Format::Markdown => render_markdown(report),
        Format::Json => render_json(report),
    };
    match output {
        Some(p) if p.is_dir() || p.to_string_lossy().ends_with('/') => {
            std::fs::create_dir_all(p)?;
            write_output(&p.join("report.md"), &render_markdown(report))?;
            write_output(&p.join("report.json"), &render_json(report))?;
            eprintln!(
                "wrote {} and {}",
                p.join("report.md").display(),
                p.join("report.json").display()
            );
        }
        Some(p) => write_output(p, &render(format))?,
        None => print!("{}", render(format)),
    }
    Ok(())
}

fn discover(config: Option<&Path>, only: &[String]) -> Result<Vec<RuntimeSpec>, HarnessError> {
    let cfg = RuntimeConfig::resolve(config)?;
    for name in only {
        if cfg.get(name).is_none() {
            return Err(HarnessError(format!("runtime `{name}` is not in the config")));
        }
    }
    let d = discover_runtimes(&cfg);
    for w in &d.warnings {
        if only.is_empty() || only.iter().any(|n| w.starts_with(&format!("{n}:"))) {
            eprintln!("warning: {w}");
        }
    }
    Ok(d.runtimes
        .into_iter()
        .filter(|r| only.is_empty() || only.contains(&r.name))
        .collect())
}

fn cmd_list(corpus: &CorpusArgs, categories: &[Category]) -> Result<i32, HarnessError> {
    let cases = load_cases(corpus)?;
    let mut out = std::io::stdout().lock();
    for c in cases
        .iter()
        .filter(|c| categories.is_empty() || categories.contains(&c.category))
    {
        let features: Vec<_> = c.features.iter().map(|f| f.name()).collect();
        let oracles: Vec<_> = c.oracles.iter().map(|o| o.name()).collect();
        writeln!(
            out,
            "{:<36} {:<5} [{}] {}  {}",
            c.id,
            c.category.id(),
            features.join(","),
            oracles.join("+"),
            c.note
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_validate(corpus: &CorpusArgs) -> Result<i32, HarnessError> {
    let cases = load_cases(corpus)?;
    let report = verify_corpus(&cases);
    for f in &report.failures {
        println!("FAIL {f}");
    }
    let covered: std::collections::BTreeSet<_> = cases.iter().map(|c| c.category).collect();
    let missing: Vec<String> = Category::detector_backed_set()
        .filter(|c| !covered.contains(c))
        .map(|c| c.id())
        .collect();
    println!(
        "{} cases checked, {} confirmed by the reference evaluator, {} failures",
        report.checked,
        report.evaluated,
        report.failures.len()
    );
    if !missing.is_empty() {
        println!("detector categories without a case: {}", missing.join(", "));
    }
    Ok(if report.is_clean() { EXIT_OK } else { EXIT_BUGS })
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    corpus: &CorpusArgs,
    runtimes: &[String],
    modes: &[ExecutionMode],
    categories: &[Category],
    case_ids: &[String],
    timeout: f64,
    jobs: Option<usize>,
    config: Option<&Path>,
    output: Option<&Path>,
    format: Format,
) -> Result<i32, HarnessError> {
    let timeout = timeout_of(timeout)?;
    let mut cases = load_cases(corpus)?;
    for id in case_ids {
        if !cases.iter().any(|c| &c.id == id) {
            return Err(HarnessError(format!("unknown case `{id}`")));
        }
    }
    cases.retain(|c| {
        (categories.is_empty() || categories.contains(&c.category)) && (case_ids.is_empty() || case_ids.contains(&c.id))
    });
    let specs = discover(config, runtimes)?;
    if specs.is_empty() {
        return Err(HarnessError("no runtimes discovered".into()));
    }
    let mut opts = RunOptions {
        modes: (!modes.is_empty()).then(|| modes.to_vec()),
        timeout,
        ..RunOptions::default()
    };
    if let Some(j) = jobs {
        opts.jobs = j.max(1);
    }
    eprintln!(
        "running {} cases on {}",
        cases.len(),
        specs
            .iter()
            .map(|s| format!("{} {}", s.name, s.version))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let out = run_pipeline(&cases, &specs, &opts)?;
    for e in &out.errors {
        eprintln!("error: {e}");
    }
    let report = aggregate(&out.records, Metadata::collect(&specs, modes));
    emit(&report, format, output)?;
    if !out.errors.is_empty() {
        return Ok(EXIT_HARNESS);
    }
    Ok(report.exit_status())
}

fn cmd_report(input: &Path, format: Format, output: Option<&Path>) -> Result<i32, HarnessError> {
    let text = std::fs::read_to_string(input).map_err(|e| HarnessError(format!("{}: {e}", input.display())))?;
    let report: Report =
        serde_json::from_str(&text).map_err(|e| HarnessError(format!("{}: not a report: {e}", input.display())))?;
    emit(&report, format, output)?;
    Ok(report.exit_status())
}

#[allow(clippy::too_many_arguments)]
fn cmd_repro(
    case_id: &str,
    runtime: &str,
    mode: Option<ExecutionMode>,
    corpus: &CorpusArgs,
    timeout: f64,
    config: Option<&Path>,
    keep: bool,
) -> Result<i32, HarnessError> {
    let timeout = timeout_of(timeout)?;
    let cases = load_cases(corpus)?;
    let case = cases
        .iter()
        .find(|c| c.id == case_id)
        .ok_or_else(|| HarnessError(format!("unknown case `{case_id}`")))?;
    let spec = discover(config, &[runtime.to_string()])?
        .into_iter()
        .next()
        .ok_or_else(|| HarnessError(format!("runtime `{runtime}` not discovered")))?;
    let mode = match mode {
        Some(m) if spec.modes.contains(&m) => m,
        Some(m) => return Err(HarnessError(format!("{runtime} has no {m} mode"))),
        None => spec.modes[0],
    };
    let work = std::env::temp_dir().join("sentinel-repro");
    let mut results = Vec::new();
    let mut last = None;
    for i in 0..case.repeats.max(1) {
        let sb = materialize_fixture(case, &work)?;
        if i == 0 {
            println!("case:    {} [{}] {}", case.id, case.category.label(), case.note);
            println!("runtime: {} {} ({mode})", spec.name, spec.version);
            println!("sandbox: {}", sb.fs_root().display());
            for cmd in command_lines(&spec, mode, case, &sb, timeout)? {
                println!("$ {}", cmd.display());
            }
        }
        let r = execute(&spec, mode, case, &sb, timeout)?;
        println!(
            "--- run {}: {} in {} ms, peak {}",
            i + 1,
            r.describe_termination(),
            r.duration_ms,
            r.peak_memory.map_or("n/a".to_string(), |b| format!("{b} B"))
        );
        println!("stdout:\n{}", r.stdout_text());
        println!("stderr:\n{}", r.stderr_text());
        results.push(r);
        if let Some(prev) = last.replace(sb) {
            drop(prev);
        }
    }
    let verdict = judge_single(&results, case, last.as_ref());
    println!("verdict: {} ({}) {}", verdict.kind, verdict.rule, verdict.detail);
    if let Some(e) = &verdict.expected {
        println!("expected: {e}");
    }
    if let Some(a) = &verdict.actual {
        println!("actual:   {a}");
    }
    if keep {
        if let Some(sb) = last {
            println!("kept sandbox at {}", sb.keep().display());
        }
    }
    Ok(if verdict.kind.is_bug() { EXIT_BUGS } else { EXIT_OK })
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_HARNESS } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::List { corpus, categories } => cmd_list(corpus, categories),
        Command::Validate { corpus } => cmd_validate(corpus),
        Command::Run {
            corpus,
            runtimes,
            modes,
            categories,
            cases,
            timeout,
            jobs,
            config,
            output,
            format,
        } => cmd_run(
            corpus,
            runtimes,
            modes,
            categories,
            cases,
            *timeout,
            *jobs,
            config.as_deref(),
            output.as_deref(),
            *format,
        ),
        Command::Report { input, format, output } => cmd_report(input, *format, output.as_deref()),
        Command::Repro {
            case,
            runtime,
            mode,
            corpus,
            timeout,
            config,
            keep,
        } => cmd_repro(case, runtime, *mode, corpus, *timeout, config.as_deref(), *keep),
    };
    match result {
        Ok(code) => code,
        Err(HarnessError(msg)) => {
            eprintln!("error: {msg}");
            EXIT_HARNESS
        }
    }
}
