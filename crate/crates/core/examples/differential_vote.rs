//! Majority voting across runtimes on synthetic observations.

use std::collections::BTreeMap;

use sentinel::adapters::{RunResult, Termination};
use sentinel::oracle::judge_differential;

fn show(title: &str, outputs: &[(&str, &str)]) {
    let results: BTreeMap<&str, RunResult> = outputs
        .iter()
        .map(|(k, out)| (*k, RunResult::synthetic(out, Termination::Exit(0))))
        .collect();
    println!("{title}");
    for (k, v) in judge_differential(&results) {
        println!("  {k:<16} {:<10} {}", v.kind, v.detail);
    }
}

fn main() {
    // rotr(4, 0) with one backend rotating by 64 instead of 0
    show(
        "4/1 split",
        &[
            ("wasmer/jit", "4"),
            ("wasmtime/jit", "4"),
            ("wamr/aot", "0"),
            ("wasm3/interp", "4"),
            ("wasmedge/interp", "4"),
        ],
    );
    show("2/2 split", &[("a", "1"), ("b", "1"), ("c", "2"), ("d", "2")]);
    show("single participant", &[("only", "4")]);

    let mut crash = BTreeMap::new();
    crash.insert("x", RunResult::synthetic("4", Termination::Exit(0)));
    crash.insert("y", RunResult::synthetic("4", Termination::Exit(0)));
    crash.insert("z", RunResult::synthetic("", Termination::Signal(11)));
    println!("crash in the minority");
    for (k, v) in judge_differential(&crash) {
        println!("  {k:<16} {:<10} {}", v.kind, v.detail);
    }
}
