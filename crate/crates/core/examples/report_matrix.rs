//! Aggregate synthetic verdicts into the category-by-runtime matrix.

use sentinel::adapters::ExecutionMode;
use sentinel::category::Category;
use sentinel::oracle::{Verdict, VerdictKind};
use sentinel::pipeline::VerdictRecord;
use sentinel::report::{aggregate, render_json, render_markdown, Metadata, RuntimeInfo};

fn record(case: &str, cat: Category, rt: &str, mode: ExecutionMode, v: Verdict) -> VerdictRecord {
    VerdictRecord {
        case_id: case.into(),
        category: cat,
        runtime: rt.into(),
        mode,
        verdict: v,
        command: String::new(),
    }
}

fn main() {
    use ExecutionMode::*;
    let mut records = Vec::new();
    for (i, case) in ["B1.a", "B1.b", "B1.c", "B1.d"].iter().enumerate() {
        let mut v = Verdict::new(VerdictKind::Fail, "FilesystemState", format!("entry {i} missing"));
        v.expected = Some("203".into());
        v.actual = Some("147".into());
        records.push(record(case, Category::B1, "wasmedge", Interpreter, v.clone()));
        // same bug in another mode is merged, not double-counted
        records.push(record(case, Category::B1, "wasmedge", Aot, v));
        records.push(record(case, Category::B1, "wasmtime", Jit, Verdict::pass("all")));
    }
    records.push(record(
        "A2.rotr",
        Category::A2,
        "wamr",
        Aot,
        Verdict::new(VerdictKind::Fail, "Differential", "minority output"),
    ));
    records.push(record(
        "A2.rotr",
        Category::A2,
        "wasmtime",
        Jit,
        Verdict::pass("Differential"),
    ));
    records.push(record(
        "B3.root",
        Category::B3,
        "wasm3",
        Interpreter,
        Verdict::skip("no preopen support"),
    ));
    records.push(record(
        "C5.hang",
        Category::C5,
        "wamr",
        Interpreter,
        Verdict::new(VerdictKind::Timeout, "Timeout", "timeout after 10000 ms"),
    ));

    let metadata = Metadata {
        harness_version: "demo".into(),
        os: "linux".into(),
        arch: "x86_64".into(),
        timestamp: "2024-01-01T00:00:00Z".into(),
        modes: vec![],
        runtimes: ["wasmtime", "wamr", "wasm3", "wasmedge"]
            .iter()
            .map(|n| RuntimeInfo {
                name: n.to_string(),
                version: "0.0.0".into(),
                modes: vec![],
            })
            .collect(),
    };
    let report = aggregate(&records, metadata);
    print!("{}", render_markdown(&report));
    println!(
        "B.1 on wasmedge renders as {:?}",
        report.matrix.cell(Category::B1, "wasmedge").map(|c| c.render())
    );
    println!(
        "json is {} bytes; exit status {}",
        render_json(&report).len(),
        report.exit_status()
    );
}
