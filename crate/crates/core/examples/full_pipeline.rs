//! End to end: three stub runtimes, one of which mis-rotates, run through
//! planning, execution, judging and reporting.
//!
//! Runs against real runtimes go through the CLI instead:
//! `sentinel run --runtime wasmtime --output out/`.

use std::os::unix::fs::PermissionsExt;
use std::path::Path;

use sentinel::adapters::{discover_runtimes, RuntimeConfig};
use sentinel::category::Category;
use sentinel::corpus::{OracleSpec, TestCase};
use sentinel::eval::Value;
use sentinel::pipeline::{run_pipeline, RunOptions};
use sentinel::report::{aggregate, render_markdown, Metadata};

fn stub(dir: &Path, name: &str, rotr_zero: &str) -> String {
    let path = dir.join(name);
    let script = format!(
        "#!/bin/sh\n[ \"$1\" = --version ] && {{ echo \"{name} 1.0.0\"; exit 0; }}\n\
         shift 3\n[ \"$2\" = 0 ] && {{ echo {rotr_zero}; exit 0; }}\necho \"$1\"\n"
    );
    std::fs::write(&path, script).expect("write stub");
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).expect("chmod");
    format!(
        r#""{name}": {{ "binary": "{}", "modes": ["interpreter", "jit"],
            "templates": {{
              "interpreter": {{ "run": "{{binary}} run {{module}}", "invoke": "{{binary}} --invoke {{invoke}} {{module}} {{args}}" }},
              "jit": {{ "run": "{{binary}} run {{module}}", "invoke": "{{binary}} --invoke {{invoke}} {{module}} {{args}}" }} }},
            "features": {{ "SIMD": false, "WASI": false, "START_SECTION": false }} }}"#,
        path.display()
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("tempdir");
    let entries = [
        stub(dir.path(), "alpha", "4"),
        stub(dir.path(), "beta", "4"),
        stub(dir.path(), "gamma", "0"),
    ];
    let config = RuntimeConfig::parse(&format!("{{ {} }}", entries.join(","))).expect("config");
    let runtimes = discover_runtimes(&config).runtimes;

    let cases = vec![TestCase::new(
        "A2.rotr-zero",
        Category::A2,
        r#"(module (func (export "rotr") (param i64 i64) (result i64) local.get 0 local.get 1 i64.rotr))"#,
    )
    .invoke("rotr", vec![Value::I64(4), Value::I64(0)])
    .oracle(OracleSpec::Differential)];

    let out = run_pipeline(&cases, &runtimes, &RunOptions::default()).expect("pipeline");
    for r in &out.records {
        println!(
            "{:<14} {:<6} {:<12} {}",
            r.case_id,
            r.runtime,
            r.mode.to_string(),
            r.verdict.kind
        );
    }
    let report = aggregate(&out.records, Metadata::collect(&runtimes, &[]));
    print!("\n{}", render_markdown(&report));
}
