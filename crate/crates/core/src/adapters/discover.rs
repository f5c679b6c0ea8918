use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;

use super::config::{ExecutionMode, RuntimeConfig, RuntimeEntry};
use super::exec::{run_process, CommandSpec, Termination};
use super::RuntimeSpec;

const VERSION_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Default)]
pub struct Discovery {
    pub runtimes: Vec<RuntimeSpec>,
    pub warnings: Vec<String>,
}

/// First dotted version number in a `--version` banner.
pub fn parse_version(banner: &str) -> Option<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\bv?(\d+\.\d+(?:\.\d+)?(?:-[0-9A-Za-z.]+)?)").unwrap());
    re.captures(banner).map(|c| c[1].to_string())
}

fn locate(binary: &str) -> Option<PathBuf> {
    which::which(binary).ok().or_else(|| {
        let p = Path::new(binary);
        (p.components().count() > 1 && p.is_file()).then(|| p.to_path_buf())
    })
}

fn probe_version(binary: &Path, args: &[String]) -> Result<String, String> {
    let mut argv = vec![binary.to_string_lossy().into_owned()];
    argv.extend(args.iter().cloned());
    let mut env = Vec::new();
    if let Some(path) = std::env::var_os("PATH") {
        env.push(("PATH".to_string(), path.to_string_lossy().into_owned()));
    }
    let raw = run_process(&CommandSpec {
        argv,
        cwd: std::env::temp_dir(),
        env,
        stdin: None,
        timeout: VERSION_TIMEOUT,
    })
    .map_err(|e| e.to_string())?;
    if raw.termination != Termination::Exit(0) {
        return Err(format!("version probe ended with {:?}", raw.termination));
    }
    let banner = format!(
        "{}\n{}",
        String::from_utf8_lossy(&raw.stdout),
        String::from_utf8_lossy(&raw.stderr)
    );
    Ok(parse_version(&banner).unwrap_or_else(|| "unknown".to_string()))
}

fn discover_one(entry: &RuntimeEntry, warnings: &mut Vec<String>) -> Option<RuntimeSpec> {
    let Some(binary) = locate(&entry.binary) else {
        warnings.push(format!("{}: `{}` not found", entry.name, entry.binary));
        return None;
    };
    let version = match probe_version(&binary, &entry.version_args) {
        Ok(v) => v,
        Err(e) => {
            warnings.push(format!(
                "{}: {} did not answer a version probe: {e}",
                entry.name,
                binary.display()
            ));
            return None;
        }
    };
    let mut compiler = None;
    let mut spec_modes = entry.modes.clone();
    if let Some(name) = entry.aot_precompile.as_ref().and_then(|p| p.compiler.as_deref()) {
        match locate(name) {
            Some(p) => compiler = Some(p),
            None => {
                spec_modes.retain(|m| *m != ExecutionMode::Aot);
                warnings.push(format!(
                    "{}: AoT compiler `{name}` not found; aot mode disabled",
                    entry.name
                ));
            }
        }
    }
    if spec_modes.is_empty() {
        return None;
    }
    let mut spec = RuntimeSpec::from_entry(entry, binary, compiler, version);
    spec.modes = spec_modes;
    Some(spec)
}

/// Locates and version-probes every configured runtime. Missing or silent
/// binaries become warnings.
pub fn discover_runtimes(config: &RuntimeConfig) -> Discovery {
    let mut d = Discovery::default();
    for entry in &config.runtimes {
        if let Some(spec) = discover_one(entry, &mut d.warnings) {
            d.runtimes.push(spec);
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn versions() {
        assert_eq!(parse_version("wasmtime-cli 0.38.0").as_deref(), Some("0.38.0"));
        assert_eq!(parse_version("Wasm3 v0.5.0 on x86_64").as_deref(), Some("0.5.0"));
        assert_eq!(parse_version("wasmedge version 0.9.1").as_deref(), Some("0.9.1"));
        assert_eq!(parse_version("wasmer 2.3.0").as_deref(), Some("2.3.0"));
        assert_eq!(parse_version("iwasm 1.3.2-rc1").as_deref(), Some("1.3.2-rc1"));
        assert_eq!(parse_version("no digits"), None);
    }

    #[test]
    fn missing_binaries_warn() {
        let cfg = RuntimeConfig::parse(
            r#"{"ghost": {"binary": "no-such-runtime-xyz", "modes": ["jit"],
                 "templates": {"jit": {"run": "{binary} {module}"}}}}"#,
        )
        .unwrap();
        let d = discover_runtimes(&cfg);
        assert!(d.runtimes.is_empty());
        assert_eq!(d.warnings.len(), 1);
    }
}
