//! Drive a fake runtime through the adapter layer: discovery, command
//! expansion, and classification of exits, signals and hangs.

use std::os::unix::fs::PermissionsExt;
use std::time::Duration;

use sentinel::adapters::{discover_runtimes, execute, ExecutionMode, RuntimeConfig};
use sentinel::category::Category;
use sentinel::corpus::{materialize_fixture, TestCase};
use sentinel::eval::Value;

const STUB: &str = r#"#!/bin/sh
[ "$1" = --version ] && { echo "stub 0.3.1"; exit 0; }
name="$2"; shift 3
case "$name" in
  echo) echo "$@" ;;
  fail) echo "error: boom" >&2; exit 3 ;;
  crash) kill -SEGV $$ ;;
  hang) sleep 60 & sleep 60 ;;
esac
"#;

fn main() {
    let dir = tempfile::tempdir().expect("tempdir");
    let stub = dir.path().join("stub-runtime");
    std::fs::write(&stub, STUB).expect("write stub");
    std::fs::set_permissions(&stub, std::fs::Permissions::from_mode(0o755)).expect("chmod");

    let config = RuntimeConfig::parse(&format!(
        r#"{{ "stub": {{
            "binary": "{}",
            "modes": ["interpreter"],
            "templates": {{ "interpreter": {{
                "run": "{{binary}} --run {{module}}",
                "invoke": "{{binary}} --invoke {{invoke}} {{module}} {{args}}" }} }},
            "features": {{ "SIMD": false, "WASI": false, "START_SECTION": false }} }} }}"#,
        stub.display()
    ))
    .expect("config parses");
    let found = discover_runtimes(&config);
    let rt = &found.runtimes[0];
    println!("discovered {} {} at {}", rt.name, rt.version, rt.binary.display());

    for name in ["echo", "fail", "crash", "hang"] {
        let wat = format!(r#"(module (func (export "{name}") (param i32 i32)))"#);
        let case =
            TestCase::new(&format!("demo.{name}"), Category::C5, wat).invoke(name, vec![Value::I32(4), Value::I32(0)]);
        let sandbox = materialize_fixture(&case, dir.path()).expect("sandbox");
        let r = execute(rt, ExecutionMode::Interpreter, &case, &sandbox, Duration::from_secs(1)).expect("runs");
        println!(
            "{name:<6} {:<28} crash={:?} stdout={:?} stderr={:?}",
            r.describe_termination(),
            r.crash_signal(),
            r.stdout_text().trim(),
            r.stderr_text().trim()
        );
    }
}
