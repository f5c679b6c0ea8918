//! `runtimes.json`: per-runtime binaries, modes and command templates.
//!
//! A template is a whitespace-separated word list. Scalar placeholders may
//! appear anywhere inside a word; list placeholders must be a whole word:
//!
//! | placeholder | expands to |
//! |---|---|
//! | `{binary}` | runtime executable |
//! | `{compiler}` | AoT compiler executable (precompile templates) |
//! | `{module}` | path of the `.wasm` file |
//! | `{artifact}` | path of the precompiled artifact |
//! | `{invoke}` | exported function name |
//! | `{sandbox}` | guest filesystem root on the host |
//! | `{args}` | one word per invocation argument |
//! | `{preopen:FMT}` | FMT per preopen, with `{host}` and `{guest}` |
//! | `{env:FMT}` | FMT per fixture variable, with `{key}` and `{value}` |

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Feature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionMode {
    Interpreter,
    Jit,
    Aot,
}

impl ExecutionMode {
    pub const ALL: [ExecutionMode; 3] = [ExecutionMode::Interpreter, ExecutionMode::Jit, ExecutionMode::Aot];

    pub fn name(self) -> &'static str {
        match self {
            ExecutionMode::Interpreter => "interpreter",
            ExecutionMode::Jit => "jit",
            ExecutionMode::Aot => "aot",
        }
    }
}

impl fmt::Display for ExecutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExecutionMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.to_ascii_lowercase().as_str() {
            "interpreter" | "interp" => Ok(ExecutionMode::Interpreter),
            "jit" => Ok(ExecutionMode::Jit),
            "aot" => Ok(ExecutionMode::Aot),
            _ => Err(ConfigError::UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown placeholder `{{{placeholder}}}` in template `{template}`")]
    UnknownPlaceholder { placeholder: String, template: String },
    #[error("unbalanced braces in template `{0}`")]
    Unbalanced(String),
    #[error("unknown execution mode `{0}` (expected interpreter, jit or aot)")]
    UnknownMode(String),
    #[error("runtime `{runtime}`: {reason}")]
    Runtime { runtime: String, reason: String },
    #[error("malformed runtime config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read runtime config {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Binary,
    Compiler,
    Module,
    Artifact,
    Invoke,
    Sandbox,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Seg {
    Lit(String),
    Var(Var),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Word {
    Text(Vec<Seg>),
    Args,
    /// Sub-template words with `{host}`/`{guest}` or `{key}`/`{value}`.
    Preopen(Vec<String>),
    Env(Vec<String>),
}

/// A parsed command template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    words: Vec<Word>,
}

/// Values substituted into a template.
#[derive(Debug, Clone, Default)]
pub struct Bindings<'a> {
    pub binary: &'a str,
    pub compiler: &'a str,
    pub module: &'a str,
    pub artifact: &'a str,
    pub invoke: &'a str,
    pub sandbox: &'a str,
    pub args: Vec<String>,
    /// (host, guest)
    pub preopens: Vec<(String, String)>,
    pub env: Vec<(String, String)>,
}

fn split_words(s: &str) -> Result<Vec<String>, ConfigError> {
    let mut words = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    for c in s.chars() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            return Err(ConfigError::Unbalanced(s.to_string()));
        }
        if c.is_whitespace() && depth == 0 {
            if !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(c);
        }
    }
    if depth != 0 {
        return Err(ConfigError::Unbalanced(s.to_string()));
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    Ok(words)
}

/// Splits `word` into literal text and `{name}` references.
fn segments(word: &str, template: &str) -> Result<Vec<(bool, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut rest = word;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            out.push((false, rest[..open].to_string()));
        }
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| ConfigError::Unbalanced(template.to_string()))?
            + open;
        let name = &rest[open + 1..close];
        if name.contains('{') {
            return Err(ConfigError::Unbalanced(template.to_string()));
        }
        out.push((true, name.to_string()));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        out.push((false, rest.to_string()));
    }
    Ok(out)
}

fn sub_template(fmt: &str, allowed: [&str; 2], template: &str) -> Result<Vec<String>, ConfigError> {
    let words = split_words(fmt)?;
    for w in &words {
        for (is_var, name) in segments(w, template)? {
            if is_var && !allowed.contains(&name.as_str()) {
                return Err(ConfigError::UnknownPlaceholder {
                    placeholder: name,
                    template: template.to_string(),
                });
            }
        }
    }
    Ok(words)
}

fn fill(word: &str, pairs: [(&str, &str); 2]) -> String {
    let mut s = word.to_string();
    for (k, v) in pairs {
        s = s.replace(&format!("{{{k}}}"), v);
    }
    s
}

impl Template {
    pub fn parse(source: &str) -> Result<Template, ConfigError> {
        let mut words = Vec::new();
        for w in split_words(source)? {
            if w == "{args}" {
                words.push(Word::Args);
                continue;
            }
            if let Some(inner) = w.strip_prefix("{preopen:").and_then(|r| r.strip_suffix('}')) {
                words.push(Word::Preopen(sub_template(inner, ["host", "guest"], source)?));
                continue;
            }
            if let Some(inner) = w.strip_prefix("{env:").and_then(|r| r.strip_suffix('}')) {
                words.push(Word::Env(sub_template(inner, ["key", "value"], source)?));
                continue;
            }
            let mut segs = Vec::new();
            for (is_var, text) in segments(&w, source)? {
                if !is_var {
                    segs.push(Seg::Lit(text));
                    continue;
                }
                let var = match text.as_str() {
                    "binary" => Var::Binary,
                    "compiler" => Var::Compiler,
                    "module" => Var::Module,
                    "artifact" => Var::Artifact,
                    "invoke" => Var::Invoke,
                    "sandbox" => Var::Sandbox,
                    _ => {
                        return Err(ConfigError::UnknownPlaceholder {
                            placeholder: text,
                            template: source.to_string(),
                        })
                    }
                };
                segs.push(Seg::Var(var));
            }
            words.push(Word::Text(segs));
        }
        Ok(Template {
            source: source.to_string(),
            words,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn has_preopen(&self) -> bool {
        self.words.iter().any(|w| matches!(w, Word::Preopen(_)))
    }

    pub fn uses(&self, var: Var) -> bool {
        self.words.iter().any(|w| match w {
            Word::Text(segs) => segs.contains(&Seg::Var(var)),
            _ => false,
        })
    }

    pub fn expand(&self, b: &Bindings<'_>) -> Vec<String> {
        let mut argv = Vec::new();
        for w in &self.words {
            match w {
                Word::Text(segs) => {
                    let mut s = String::new();
                    for seg in segs {
                        s.push_str(match seg {
                            Seg::Lit(t) => t,
                            Seg::Var(Var::Binary) => b.binary,
                            Seg::Var(Var::Compiler) => b.compiler,
                            Seg::Var(Var::Module) => b.module,
                            Seg::Var(Var::Artifact) => b.artifact,
                            Seg::Var(Var::Invoke) => b.invoke,
                            Seg::Var(Var::Sandbox) => b.sandbox,
                        });
                    }
                    argv.push(s);
                }
                Word::Args => argv.extend(b.args.iter().cloned()),
                Word::Preopen(fmt) => {
                    for (host, guest) in &b.preopens {
                        argv.extend(fmt.iter().map(|w| fill(w, [("host", host), ("guest", guest)])));
                    }
                }
                Word::Env(fmt) => {
                    for (key, value) in &b.env {
                        argv.extend(fmt.iter().map(|w| fill(w, [("key", key), ("value", value)])));
                    }
                }
            }
        }
        argv
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeTemplates {
    /// Runs the module's entry point.
    pub run: Template,
    /// Calls one export with `{invoke}` and `{args}`.
    pub invoke: Option<Template>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Precompile {
    /// Separate compiler executable; `{binary}` is used when absent.
    pub compiler: Option<String>,
    pub template: Template,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Radix {
    Dec,
    Hex,
}

/// Rewrites a runtime's result lines (e.g. `0x4:i64`) into plain decimal.
#[derive(Debug, Clone)]
pub struct ResultFilter {
    pub pattern: Regex,
    pub radix: Radix,
}

impl PartialEq for ResultFilter {
    fn eq(&self, other: &Self) -> bool {
        self.pattern.as_str() == other.pattern.as_str() && self.radix == other.radix
    }
}

impl ResultFilter {
    /// Lines matching the pattern are replaced by the canonical rendering
    /// of their `value` group (typed by the optional `type` group); other
    /// lines are kept.
    pub fn apply(&self, stdout: &str) -> String {
        let mut out = Vec::new();
        for line in stdout.lines() {
            let Some(caps) = self.pattern.captures(line) else {
                out.push(line.to_string());
                continue;
            };
            let Some(value) = caps.name("value") else {
                out.push(line.to_string());
                continue;
            };
            let ty = caps.name("type").map(|m| m.as_str()).unwrap_or("");
            out.push(normalize_value(value.as_str().trim(), ty, self.radix).unwrap_or_else(|| line.to_string()));
        }
        let mut s = out.join("\n");
        if stdout.ends_with('\n') {
            s.push('\n');
        }
        s
    }
}

fn normalize_value(text: &str, ty: &str, radix: Radix) -> Option<String> {
    let is_float = matches!(ty, "f32" | "f64") || (ty.is_empty() && radix == Radix::Dec && text.contains('.'));
    if is_float && radix == Radix::Dec {
        let v: f64 = text.parse().ok()?;
        return Some(if ty == "f32" {
            (v as f32).to_string()
        } else {
            v.to_string()
        });
    }
    let (neg, digits) = match text.strip_prefix('-') {
        Some(d) => (true, d),
        None => (false, text),
    };
    let raw = match radix {
        Radix::Hex => u64::from_str_radix(digits.trim_start_matches("0x").trim_start_matches("0X"), 16).ok()?,
        Radix::Dec => digits.parse::<u64>().ok()?,
    };
    let raw = if neg { raw.wrapping_neg() } else { raw };
    Some(match ty {
        "i32" => (raw as u32 as i32).to_string(),
        "i64" => (raw as i64).to_string(),
        "f32" => f32::from_bits(raw as u32).to_string(),
        "f64" => f64::from_bits(raw).to_string(),
        _ if neg => (raw as i64).to_string(),
        _ => raw.to_string(),
    })
}

/// A runtime as declared in the config, before its binary is located.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeEntry {
    pub name: String,
    pub binary: String,
    pub version_args: Vec<String>,
    pub modes: Vec<ExecutionMode>,
    pub templates: BTreeMap<ExecutionMode, ModeTemplates>,
    pub aot_precompile: Option<Precompile>,
    pub artifact_ext: String,
    pub result_filter: Option<ResultFilter>,
    /// Features pinned in the config instead of probed.
    pub features: BTreeMap<Feature, bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeConfig {
    pub runtimes: Vec<RuntimeEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDto {
    binary: String,
    #[serde(default = "default_version_args")]
    version_args: Vec<String>,
    modes: Vec<String>,
    templates: BTreeMap<String, TemplatesDto>,
    aot_precompile: Option<PrecompileDto>,
    #[serde(default = "default_artifact_ext")]
    artifact_ext: String,
    result_filter: Option<FilterDto>,
    #[serde(default)]
    features: BTreeMap<Feature, bool>,
}

fn default_version_args() -> Vec<String> {
    vec!["--version".to_string()]
}

fn default_artifact_ext() -> String {
    "aot".to_string()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplatesDto {
    run: String,
    invoke: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrecompileDto {
    compiler: Option<String>,
    template: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterDto {
    pattern: String,
    #[serde(default = "default_radix")]
    radix: Radix,
}

fn default_radix() -> Radix {
    Radix::Dec
}

/// Default config shipped with the harness.
pub const DEFAULT_RUNTIMES_JSON: &str = include_str!("../../runtimes.json");

/// Environment variable overriding the config path.
pub const CONFIG_ENV: &str = "SENTINEL_RUNTIMES";

impl RuntimeConfig {
    pub fn parse(text: &str) -> Result<RuntimeConfig, ConfigError> {
        let raw: BTreeMap<String, EntryDto> = serde_json::from_str(text)?;
        let mut runtimes = Vec::new();
        for (name, dto) in raw {
            runtimes.push(convert_entry(name, dto)?);
        }
        Ok(RuntimeConfig { runtimes })
    }

    pub fn load(path: &Path) -> Result<RuntimeConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RuntimeConfig::parse(&text)
    }

    pub fn builtin() -> RuntimeConfig {
        RuntimeConfig::parse(DEFAULT_RUNTIMES_JSON).expect("shipped runtimes.json parses")
    }

    /// `explicit`, else `$SENTINEL_RUNTIMES`, else the shipped defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<RuntimeConfig, ConfigError> {
        if let Some(p) = explicit {
            return RuntimeConfig::load(p);
        }
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => RuntimeConfig::load(Path::new(&p)),
            _ => Ok(RuntimeConfig::builtin()),
        }
    }

    pub fn get(&self, name: &str) -> Option<&RuntimeEntry> {
        self.runtimes.iter().find(|r| r.name == name)
    }
}

fn convert_entry(name: String, dto: EntryDto) -> Result<RuntimeEntry, ConfigError> {
    let bad = |reason: String| ConfigError::Runtime {
        runtime: name.clone(),
        reason,
    };
    let mut modes = Vec::new();
    for m in &dto.modes {
        let mode: ExecutionMode = m.parse()?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        return Err(bad("declares no modes".into()));
    }
    let mut templates = BTreeMap::new();
    for (key, t) in dto.templates {
        let mode: ExecutionMode = key.parse()?;
        let run = Template::parse(&t.run)?;
        let invoke = t.invoke.as_deref().map(Template::parse).transpose()?;
        templates.insert(mode, ModeTemplates { run, invoke });
    }
    for m in &modes {
        if !templates.contains_key(m) {
            return Err(bad(format!("mode {m} has no template")));
        }
    }
    let aot_precompile = match dto.aot_precompile {
        Some(p) => Some(Precompile {
            compiler: p.compiler,
            template: Template::parse(&p.template)?,
        }),
        None => None,
    };
    if let Some(p) = &aot_precompile {
        if !p.template.uses(Var::Artifact) {
            return Err(bad("aot_precompile template must write {artifact}".into()));
        }
    }
    if modes.contains(&ExecutionMode::Aot) {
        let aot = &templates[&ExecutionMode::Aot];
        let reads_artifact = aot.run.uses(Var::Artifact) || aot.invoke.as_ref().is_some_and(|t| t.uses(Var::Artifact));
        if reads_artifact && aot_precompile.is_none() {
            return Err(bad(
                "aot templates read {artifact} but no aot_precompile is given".into()
            ));
        }
    }
    let result_filter = match dto.result_filter {
        Some(f) => {
            let pattern = Regex::new(&f.pattern).map_err(|e| bad(format!("result_filter: {e}")))?;
            if pattern.capture_names().all(|n| n != Some("value")) {
                return Err(bad("result_filter needs a named group `value`".into()));
            }
            Some(ResultFilter {
                pattern,
                radix: f.radix,
            })
        }
        None => None,
    };
    Ok(RuntimeEntry {
        name,
        binary: dto.binary,
        version_args: dto.version_args,
        modes,
        templates,
        aot_precompile,
        artifact_ext: dto.artifact_ext,
        result_filter,
        features: dto.features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_placeholder() {
        let err = Template::parse("{binary} run {modulee}").unwrap_err();
        assert!(
            matches!(&err, ConfigError::UnknownPlaceholder { placeholder, .. } if placeholder == "modulee"),
            "{err}"
        );
        assert!(Template::parse("{preopen:--dir {hots}}").is_err());
        assert!(Template::parse("{binary").is_err());
    }

    #[test]
    fn expansion() {
        let t = Template::parse("{binary} run {preopen:--mapdir {guest}:{host}} {env:--env {key}={value}} --invoke {invoke} {module} {args}").unwrap();
        assert!(t.has_preopen());
        let argv = t.expand(&Bindings {
            binary: "/bin/rt",
            module: "m.wasm",
            invoke: "f",
            args: vec!["1".into(), "2".into()],
            preopens: vec![("/tmp/a".into(), "/a".into()), ("/tmp/b".into(), "/".into())],
            env: vec![("K".into(), "V".into())],
            ..Bindings::default()
        });
        assert_eq!(
            argv,
            [
                "/bin/rt",
                "run",
                "--mapdir",
                "/a:/tmp/a",
                "--mapdir",
                "/:/tmp/b",
                "--env",
                "K=V",
                "--invoke",
                "f",
                "m.wasm",
                "1",
                "2"
            ]
        );
    }

    #[test]
    fn builtin_config_parses() {
        let cfg = RuntimeConfig::builtin();
        let names: Vec<_> = cfg.runtimes.iter().map(|r| r.name.as_str()).collect();
        for n in ["wasmer", "wasmtime", "wamr", "wasm3", "wasmedge"] {
            assert!(names.contains(&n), "{n}");
        }
        assert!(!cfg.get("wasm3").unwrap().templates[&ExecutionMode::Interpreter]
            .run
            .has_preopen());
    }

    #[test]
    fn filters_normalize() {
        let hex = ResultFilter {
            pattern: Regex::new(r"^0x(?P<value>[0-9a-fA-F]+):(?P<type>i32|i64)$").unwrap(),
            radix: Radix::Hex,
        };
        assert_eq!(hex.apply("0x4:i64\n"), "4\n");
        assert_eq!(hex.apply("0xffffffe4:i32"), "-28");
        let dec = ResultFilter {
            pattern: Regex::new(r"^Result: (?P<value>\S+)$").unwrap(),
            radix: Radix::Dec,
        };
        assert_eq!(dec.apply("Result: 2.750000"), "2.75");
        assert_eq!(dec.apply("noise\nResult: 4"), "noise\n4");
    }
}
