mod common;

use std::time::Duration;

use sentinel::adapters::exec::group_alive;
use sentinel::adapters::{command_lines, execute, ExecutionMode, RunResult, RuntimeConfig, Stage, Termination};
use sentinel::category::Category;
use sentinel::corpus::{materialize_fixture, Feature, FixtureSpec, OracleSpec, TestCase};
use sentinel::eval::Value;
use sentinel::oracle::VerdictKind;
use sentinel::pipeline::{run_pipeline, RunOptions};

fn invoke_case(export: &str) -> TestCase {
    TestCase::new(
        &format!("C5.stub-{export}"),
        Category::C5,
        format!(r#"(module (func (export "{export}") (param i32 i32)))"#),
    )
    .invoke(export, vec![Value::I32(4), Value::I32(0)])
}

fn run_stub(export: &str, timeout: Duration) -> RunResult {
    let dir = tempfile::tempdir().unwrap();
    let rt = &common::stub_runtimes(dir.path(), &[("stub", "ok")], &["interpreter"])[0];
    let case = invoke_case(export);
    let sandbox = materialize_fixture(&case, dir.path()).unwrap();
    execute(rt, ExecutionMode::Interpreter, &case, &sandbox, timeout).unwrap()
}

#[test]
fn echo_is_captured() {
    let r = run_stub("echo", Duration::from_secs(5));
    assert_eq!(r.termination, Termination::Exit(0));
    assert_eq!(r.stdout_text(), "4 0\n");
    assert!(r.succeeded());
    assert_eq!(r.stage, Stage::Run);
    assert!(r.command.contains("--invoke echo"), "{}", r.command);
}

#[test]
fn nonzero_exit_is_classified() {
    let r = run_stub("fail", Duration::from_secs(5));
    assert_eq!(r.termination, Termination::Exit(3));
    assert_eq!(r.stderr_text().trim(), "error: boom");
    assert_eq!(r.crash_signal(), None);
}

#[test]
fn signal_is_classified() {
    let r = run_stub("crash", Duration::from_secs(5));
    assert_eq!(r.termination, Termination::Signal(libc::SIGSEGV));
    assert_eq!(r.crash_signal(), Some(libc::SIGSEGV));
}

#[test]
fn silent_abort_status_counts_as_crash() {
    let r = run_stub("quiet-abort", Duration::from_secs(5));
    assert_eq!(r.termination, Termination::Exit(134));
    assert_eq!(r.crash_signal(), Some(libc::SIGABRT));
    let reported = RunResult::synthetic("", Termination::Exit(134)).with_stderr("wasm trap: unreachable");
    assert_eq!(reported.crash_signal(), None);
}

#[test]
fn hang_is_killed_with_its_group() {
    let r = run_stub("hang", Duration::from_secs(2));
    assert_eq!(r.termination, Termination::TimedOut);
    assert!((2000..=4000).contains(&r.duration_ms), "{} ms", r.duration_ms);
    assert_eq!(group_alive(r.pid as libc::pid_t), Some(false));
}

#[test]
fn preopens_and_env_expand_per_template() {
    let dir = tempfile::tempdir().unwrap();
    let config = RuntimeConfig::builtin();
    let entry = config.get("wasmtime").unwrap();
    let spec = sentinel::adapters::RuntimeSpec::from_entry(entry, "/opt/wasmtime".into(), None, "1.0.0".into());
    let mut case = TestCase::new("B3.x", Category::B3, "(module)").fixture(
        FixtureSpec::default()
            .dir("data")
            .preopen("data", "/data")
            .preopen(".", "/"),
    );
    case.fixture.env.push(("KEY".into(), "v".into()));
    let sandbox = materialize_fixture(&case, dir.path()).unwrap();
    let lines = command_lines(&spec, ExecutionMode::Aot, &case, &sandbox, Duration::from_secs(1)).unwrap();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].argv[0], "/opt/wasmtime");
    assert_eq!(lines[0].argv[1], "compile");
    let run = &lines[1].argv;
    let root = sandbox.fs_root().display().to_string();
    assert!(run.contains(&format!("{root}/data::/data")), "{run:?}");
    assert!(
        run.contains(&"--env".to_string()) && run.contains(&"KEY=v".to_string()),
        "{run:?}"
    );
    assert!(run.last().unwrap().ends_with("module.cwasm"), "{run:?}");
}

#[test]
fn pipeline_votes_across_stubs() {
    let dir = tempfile::tempdir().unwrap();
    let rts = common::stub_runtimes(
        dir.path(),
        &[("alpha", "4"), ("beta", "4"), ("gamma", "0")],
        &["interpreter", "jit"],
    );
    let rotr = TestCase::new(
        "A2.rotr",
        Category::A2,
        r#"(module (func (export "rotr") (param i64 i64) (result i64) local.get 0 local.get 1 i64.rotr))"#,
    )
    .invoke("rotr", vec![Value::I64(4), Value::I64(0)])
    .oracle(OracleSpec::Differential)
    .repeats(2);
    let wasi = TestCase::new("B4.needs-wasi", Category::B4, "(module)")
        .features(&[Feature::Wasi])
        .oracle(OracleSpec::ExpectValid);
    let out = run_pipeline(&[rotr, wasi], &rts, &RunOptions::default()).unwrap();
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    assert_eq!(out.executions, 12);
    let kind = |case: &str, rt: &str| -> Vec<VerdictKind> {
        out.records
            .iter()
            .filter(|r| r.case_id == case && r.runtime == rt)
            .map(|r| r.verdict.kind)
            .collect()
    };
    assert_eq!(kind("A2.rotr", "alpha"), [VerdictKind::Pass; 2]);
    assert_eq!(kind("A2.rotr", "gamma"), [VerdictKind::Fail; 2]);
    assert_eq!(kind("B4.needs-wasi", "beta"), [VerdictKind::Skip; 2]);
    assert_eq!(out.records.len(), 12);
}

#[test]
fn failed_precompile_is_its_own_stage() {
    let dir = tempfile::tempdir().unwrap();
    let stub = common::write_stub(dir.path(), "stub", "1");
    let config = RuntimeConfig::parse(&format!(
        r#"{{ "stub": {{ "binary": "{}", "modes": ["aot"],
            "templates": {{ "aot": {{ "run": "{{binary}} run {{artifact}}" }} }},
            "aot_precompile": {{ "compiler": "false", "template": "{{compiler}} {{module}} {{artifact}}" }},
            "features": {{ "SIMD": false, "WASI": false, "START_SECTION": false }} }} }}"#,
        stub.display()
    ))
    .unwrap();
    let rts = sentinel::adapters::discover_runtimes(&config).runtimes;
    assert_eq!(rts[0].modes, [ExecutionMode::Aot]);
    let case = TestCase::new("C9.x", Category::C9, "(module)").oracle(OracleSpec::ExpectValid);
    let out = run_pipeline(&[case], &rts, &RunOptions::default()).unwrap();
    let v = &out.records[0].verdict;
    assert_eq!((v.kind, v.rule.as_str()), (VerdictKind::Fail, "Precompile"));
}
