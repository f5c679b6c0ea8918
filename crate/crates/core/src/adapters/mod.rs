//! Runtime discovery, command construction and sandboxed execution.

mod config;
mod discover;
pub mod exec;
mod plan;
mod probe;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::corpus::{CaseError, Feature, SandboxHandle, TestCase};
use crate::eval::Value;

pub use config::{
    Bindings, ConfigError, ExecutionMode, ModeTemplates, Precompile, Radix, ResultFilter, RuntimeConfig, RuntimeEntry,
    Template, Var, CONFIG_ENV, DEFAULT_RUNTIMES_JSON,
};
pub use discover::{discover_runtimes, parse_version, Discovery};
pub use exec::{run_process, CommandSpec, RawRun, SpawnError, Termination};
pub use plan::{build_plan, ExecutionPlan, PlanItem, SkipItem};
pub use probe::{probe_support, Prober, Support};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// A located, version-probed runtime.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeSpec {
    pub name: String,
    pub binary: PathBuf,
    /// AoT compiler when it is a separate executable.
    pub compiler: Option<PathBuf>,
    pub version: String,
    pub modes: Vec<ExecutionMode>,
    pub templates: BTreeMap<ExecutionMode, ModeTemplates>,
    pub aot_precompile: Option<Precompile>,
    pub artifact_ext: String,
    pub result_filter: Option<ResultFilter>,
    pub features: BTreeMap<Feature, bool>,
}

impl RuntimeSpec {
    pub fn from_entry(
        entry: &RuntimeEntry,
        binary: PathBuf,
        compiler: Option<PathBuf>,
        version: String,
    ) -> RuntimeSpec {
        RuntimeSpec {
            name: entry.name.clone(),
            binary,
            compiler,
            version,
            modes: entry.modes.clone(),
            templates: entry.templates.clone(),
            aot_precompile: entry.aot_precompile.clone(),
            artifact_ext: entry.artifact_ext.clone(),
            result_filter: entry.result_filter.clone(),
            features: entry.features.clone(),
        }
    }

    /// Whether a mode compiles ahead of time in a separate step.
    pub fn precompiles(&self, mode: ExecutionMode) -> bool {
        mode == ExecutionMode::Aot && self.aot_precompile.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Precompile,
    Run,
}

/// One observed execution.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub termination: Termination,
    pub duration_ms: u64,
    pub peak_memory: Option<u64>,
    /// `Precompile` when the AoT compile step failed and no run happened.
    pub stage: Stage,
    pub command: String,
    pub pid: u32,
}

/// Crash signals that wrapper shells report as exit status 128 + n.
const CRASH_SIGNALS: [i32; 5] = [libc::SIGILL, libc::SIGABRT, libc::SIGBUS, libc::SIGFPE, libc::SIGSEGV];

impl RunResult {
    pub fn synthetic(stdout: &str, termination: Termination) -> RunResult {
        RunResult {
            stdout: stdout.as_bytes().to_vec(),
            stderr: Vec::new(),
            termination,
            duration_ms: 0,
            peak_memory: None,
            stage: Stage::Run,
            command: String::new(),
            pid: 0,
        }
    }

    pub fn with_stderr(mut self, stderr: &str) -> RunResult {
        self.stderr = stderr.as_bytes().to_vec();
        self
    }

    pub fn with_peak(mut self, bytes: u64) -> RunResult {
        self.peak_memory = Some(bytes);
        self
    }

    pub fn stdout_text(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }

    pub fn stderr_text(&self) -> String {
        String::from_utf8_lossy(&self.stderr).into_owned()
    }

    pub fn timed_out(&self) -> bool {
        self.termination == Termination::TimedOut
    }

    pub fn exit_code(&self) -> Option<i32> {
        match self.termination {
            Termination::Exit(c) => Some(c),
            _ => None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.termination == Termination::Exit(0) && self.stage == Stage::Run
    }

    /// The signal that ended the run. A `128 + n` exit status for a crash
    /// signal counts only when nothing was written to stderr: runtimes such
    /// as wasmtime exit 134 after printing an orderly trap report.
    pub fn crash_signal(&self) -> Option<i32> {
        match self.termination {
            Termination::Signal(s) => Some(s),
            Termination::Exit(c)
                if c > 128 && CRASH_SIGNALS.contains(&(c - 128)) && self.stderr.trim_ascii().is_empty() =>
            {
                Some(c - 128)
            }
            _ => None,
        }
    }

    pub fn describe_termination(&self) -> String {
        let stage = if self.stage == Stage::Precompile {
            "precompile "
        } else {
            ""
        };
        match self.termination {
            Termination::Exit(c) => format!("{stage}exit {c}"),
            Termination::Signal(s) => format!("{stage}signal {s}"),
            Termination::TimedOut => format!("{stage}timeout after {} ms", self.duration_ms),
        }
    }

    fn from_raw(raw: RawRun, stage: Stage, command: String) -> RunResult {
        RunResult {
            stdout: raw.stdout,
            stderr: raw.stderr,
            termination: raw.termination,
            duration_ms: raw.duration.as_millis() as u64,
            peak_memory: raw.peak_memory,
            stage,
            command,
            pid: raw.pid,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExecuteError {
    #[error(transparent)]
    Spawn(#[from] SpawnError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("runtime {runtime} has no {mode} mode")]
    NoSuchMode { runtime: String, mode: ExecutionMode },
}

/// Renders an argument the way runtime CLIs parse it.
pub fn cli_arg(v: &Value) -> String {
    match v {
        Value::F32(bits) if f32::from_bits(*bits).is_nan() => "nan".into(),
        Value::F64(bits) if f64::from_bits(*bits).is_nan() => "nan".into(),
        other => other.render(),
    }
}

/// The command lines `execute` would run, precompile first when present.
pub fn command_lines(
    spec: &RuntimeSpec,
    mode: ExecutionMode,
    case: &TestCase,
    sandbox: &SandboxHandle,
    timeout: Duration,
) -> Result<Vec<CommandSpec>, ExecuteError> {
    let templates = spec.templates.get(&mode).ok_or_else(|| ExecuteError::NoSuchMode {
        runtime: spec.name.clone(),
        mode,
    })?;
    let module = sandbox.base().join("module.wasm");
    let artifact = sandbox.base().join(format!("module.{}", spec.artifact_ext));
    let binary = spec.binary.to_string_lossy().into_owned();
    let compiler = spec
        .compiler
        .as_ref()
        .map(|c| c.to_string_lossy().into_owned())
        .unwrap_or_else(|| binary.clone());
    let module_s = module.to_string_lossy().into_owned();
    let artifact_s = artifact.to_string_lossy().into_owned();
    let sandbox_s = sandbox.fs_root().to_string_lossy().into_owned();
    let bindings = Bindings {
        binary: &binary,
        compiler: &compiler,
        module: &module_s,
        artifact: &artifact_s,
        invoke: case.invoke.as_ref().map(|i| i.export.as_str()).unwrap_or(""),
        sandbox: &sandbox_s,
        args: case
            .invoke
            .as_ref()
            .map(|i| i.args.iter().map(cli_arg).collect())
            .unwrap_or_default(),
        preopens: sandbox
            .preopens
            .iter()
            .map(|p| (p.host.to_string_lossy().into_owned(), p.guest.clone()))
            .collect(),
        env: sandbox.env.clone(),
    };
    let mut env = vec![("HOME".to_string(), sandbox.base().to_string_lossy().into_owned())];
    if let Some(path) = std::env::var_os("PATH") {
        env.push(("PATH".to_string(), path.to_string_lossy().into_owned()));
    }
    let mk = |argv: Vec<String>, stdin: Option<Vec<u8>>| CommandSpec {
        argv,
        cwd: sandbox.fs_root().to_path_buf(),
        env: env.clone(),
        stdin,
        timeout,
    };

    let mut out = Vec::new();
    if spec.precompiles(mode) {
        let pre = spec.aot_precompile.as_ref().expect("checked by precompiles");
        out.push(mk(pre.template.expand(&bindings), None));
    }
    let template = match (&case.invoke, &templates.invoke) {
        (Some(_), Some(t)) => t,
        _ => &templates.run,
    };
    out.push(mk(template.expand(&bindings), sandbox.stdin.clone()));
    Ok(out)
}

/// Executes `case` once in `sandbox`. Nonzero exits, signals and timeouts
/// are returned as data; a failed AoT precompile is returned with
/// `stage == Precompile`.
pub fn execute(
    spec: &RuntimeSpec,
    mode: ExecutionMode,
    case: &TestCase,
    sandbox: &SandboxHandle,
    timeout: Duration,
) -> Result<RunResult, ExecuteError> {
    let timeout = case.timeout.unwrap_or(timeout);
    let bytes = case.module_bytes()?;
    let module = sandbox.base().join("module.wasm");
    std::fs::write(&module, bytes).map_err(|source| ExecuteError::Io {
        path: module.clone(),
        source,
    })?;

    let commands = command_lines(spec, mode, case, sandbox, timeout)?;
    let (run, pre) = commands.split_last().expect("at least the run command");
    if let Some(pre) = pre.first() {
        let raw = run_process(pre)?;
        if raw.termination != Termination::Exit(0) {
            return Ok(RunResult::from_raw(raw, Stage::Precompile, pre.display()));
        }
    }
    let raw = run_process(run)?;
    let mut result = RunResult::from_raw(raw, Stage::Run, run.display());
    if let (Some(filter), Some(_)) = (&spec.result_filter, &case.invoke) {
        result.stdout = filter.apply(&result.stdout_text()).into_bytes();
    }
    Ok(result)
}
