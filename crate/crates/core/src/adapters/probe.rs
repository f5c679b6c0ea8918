use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use crate::category::Category;
use crate::corpus::{materialize_fixture, Feature, TestCase};
use crate::eval::Value;

use super::config::ExecutionMode;
use super::{execute, RuntimeSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Support {
    Supported,
    Unsupported(String),
}

impl Support {
    pub fn is_supported(&self) -> bool {
        *self == Support::Supported
    }
}

fn probe_case(flag: Feature) -> TestCase {
    match flag {
        Feature::Simd => TestCase::new(
            "probe.simd",
            Category::A2,
            r#"(module
  (func (export "probe") (param i32) (result i32)
    (i32x4.extract_lane 0 (i32x4.splat (local.get 0)))))"#,
        )
        .invoke("probe", vec![Value::I32(3)]),
        Feature::Wasi => TestCase::new(
            "probe.wasi",
            Category::B2,
            r#"(module
  (import "wasi_snapshot_preview1" "fd_write" (func $w (param i32 i32 i32 i32) (result i32)))
  (memory (export "memory") 1)
  (data (i32.const 16) "ok\0a")
  (func (export "_start")
    (i32.store (i32.const 0) (i32.const 16))
    (i32.store (i32.const 4) (i32.const 3))
    (drop (call $w (i32.const 1) (i32.const 0) (i32.const 1) (i32.const 8)))))"#,
        ),
        Feature::StartSection => TestCase::new(
            "probe.start",
            Category::C9,
            r#"(module
  (global $g (mut i32) (i32.const 0))
  (func $s (global.set $g (i32.const 1)))
  (start $s))"#,
        ),
    }
}

/// Runs the minimal probe module for `flag`. A WASI probe fails without
/// execution when the runtime's template cannot map preopens.
pub fn probe_support(
    spec: &RuntimeSpec,
    mode: ExecutionMode,
    flag: Feature,
    work: &Path,
    timeout: Duration,
) -> Support {
    if let Some(&pinned) = spec.features.get(&flag) {
        return if pinned {
            Support::Supported
        } else {
            Support::Unsupported(format!("{flag} disabled in config"))
        };
    }
    let Some(templates) = spec.templates.get(&mode) else {
        return Support::Unsupported(format!("no {mode} mode"));
    };
    if flag == Feature::Wasi && !templates.run.has_preopen() {
        return Support::Unsupported("template has no preopen placeholder".into());
    }
    let case = probe_case(flag);
    if case.invoke.is_some() && templates.invoke.is_none() {
        return Support::Unsupported("template has no invoke form".into());
    }
    let sandbox = match materialize_fixture(&case, work) {
        Ok(s) => s,
        Err(e) => return Support::Unsupported(format!("probe sandbox: {e}")),
    };
    match execute(spec, mode, &case, &sandbox, timeout) {
        Ok(r) if r.succeeded() => {
            if flag == Feature::Wasi && r.stdout_text().trim() != "ok" {
                Support::Unsupported("WASI probe printed unexpected output".into())
            } else {
                Support::Supported
            }
        }
        Ok(r) => Support::Unsupported(format!("{flag} probe: {}", r.describe_termination())),
        Err(e) => Support::Unsupported(format!("{flag} probe: {e}")),
    }
}

/// Caches probe results per (runtime, mode, feature).
#[derive(Debug)]
pub struct Prober {
    work: PathBuf,
    timeout: Duration,
    cache: Mutex<HashMap<(String, ExecutionMode, Feature), Support>>,
}

impl Prober {
    pub fn new(work: &Path, timeout: Duration) -> Prober {
        Prober {
            work: work.to_path_buf(),
            timeout,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn support(&self, spec: &RuntimeSpec, mode: ExecutionMode, flag: Feature) -> Support {
        let key = (spec.name.clone(), mode, flag);
        if let Some(s) = self.cache.lock().unwrap().get(&key) {
            return s.clone();
        }
        let s = probe_support(spec, mode, flag, &self.work, self.timeout);
        self.cache.lock().unwrap().insert(key, s.clone());
        s
    }

    /// Number of distinct probes run so far.
    pub fn probes_run(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}
