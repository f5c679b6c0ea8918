mod common;

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sentinel");

fn sentinel(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args)
        .env_remove("SENTINEL_RUNTIMES")
        .env("PATH", "/usr/bin:/bin");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn repo_manifest() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus/manifest.json")
        .display()
        .to_string()
}

const ROTR_MANIFEST: &str = r#"[{
  "id": "A2.cli-rotr", "category": "A.2",
  "wat": "(module (func (export \"rotr\") (param i64 i64) (result i64) local.get 0 local.get 1 i64.rotr))",
  "invoke": { "export": "rotr", "args": ["i64:4", "i64:0"] },
  "oracle": { "kind": "expected_stdout", "values": ["i64:4"] }
}]"#;

/// Writes a manifest and a config with one stub runtime printing `output`.
fn stub_setup(dir: &Path, output: &str) -> (String, String) {
    let manifest = dir.join("cases.json");
    std::fs::write(&manifest, ROTR_MANIFEST).unwrap();
    let stub = common::write_stub(dir, "stubrt", output);
    let config = dir.join("runtimes.json");
    std::fs::write(
        &config,
        common::stub_config(&[common::stub_entry("stubrt", &stub, &["interpreter"])]),
    )
    .unwrap();
    (manifest.display().to_string(), config.display().to_string())
}

#[test]
fn validate_succeeds_on_shipped_corpus() {
    let out = sentinel(&["validate", "--manifest", &repo_manifest()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains(" 0 failures"), "{}", text(&out.stdout));
}

#[test]
fn list_filters_by_category() {
    let out = sentinel(&["list", "--category", "B.1"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.lines().count() >= 1);
    assert!(stdout.lines().all(|l| l.starts_with("B1.")), "{stdout}");
}

#[test]
fn run_without_runtimes_is_a_harness_error() {
    let out = sentinel(&["run", "--category", "A.2"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        text(&out.stderr).contains("no runtimes discovered"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn failing_case_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, config) = stub_setup(dir.path(), "0");
    let report_dir = dir.path().join("out/");
    let out = sentinel(
        &[
            "run",
            "--no-builtin",
            "--manifest",
            &manifest,
            "--config",
            &config,
            "--output",
            &format!("{}/", report_dir.display()),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stderr));
    let md = std::fs::read_to_string(report_dir.join("report.md")).unwrap();
    assert!(md.contains("| [A.2] Incorrect compilation | 1 |"), "{md}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["summary"]["fail"], 1);
    assert_eq!(json["failures"][0]["actual"], "0");
}

#[test]
fn passing_case_exits_zero_and_env_config_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, config) = stub_setup(dir.path(), "4");
    let out = sentinel(
        &["run", "--no-builtin", "--manifest", &manifest, "--format", "json"],
        &[("SENTINEL_RUNTIMES", &config)],
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&text(&out.stdout)).unwrap();
    assert_eq!(json["summary"]["pass"], 1);
    assert_eq!(json["metadata"]["runtimes"][0]["name"], "stubrt");
}

#[test]
fn report_rerenders_saved_json() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, config) = stub_setup(dir.path(), "0");
    let saved = dir.path().join("r.json");
    let out = sentinel(
        &[
            "run",
            "--no-builtin",
            "--manifest",
            &manifest,
            "--config",
            &config,
            "--format",
            "json",
            "--output",
            &saved.display().to_string(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let first = std::fs::read_to_string(&saved).unwrap();
    let again = sentinel(&["report", &saved.display().to_string(), "--format", "json"], &[]);
    assert_eq!(again.status.code(), Some(1));
    assert_eq!(text(&again.stdout), first);
    let md = sentinel(&["report", &saved.display().to_string()], &[]);
    assert!(
        text(&md.stdout).contains("A2.cli-rotr on stubrt"),
        "{}",
        text(&md.stdout)
    );
}

#[test]
fn repro_prints_the_command() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, config) = stub_setup(dir.path(), "0");
    let out = sentinel(
        &[
            "repro",
            "A2.cli-rotr",
            "--runtime",
            "stubrt",
            "--no-builtin",
            "--manifest",
            &manifest,
            "--config",
            &config,
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("$ ") && stdout.contains("--invoke rotr"), "{stdout}");
}

#[test]
fn bad_manifest_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("bad.json");
    std::fs::write(
        &manifest,
        r#"[{"id": "B1.x", "category": "B.1", "wat": "(module)", "oracle": {"kind": "expect_valid"},
            "fixture": {"files": [{"path": "/etc/passwd", "content": "x"}]}}]"#,
    )
    .unwrap();
    let out = sentinel(&["validate", "--manifest", &manifest.display().to_string()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        text(&out.stderr).contains("cases[0].fixture.files[0].path"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(sentinel(&["run", "--mode", "warp"], &[]).status.code(), Some(2));
    assert_eq!(sentinel(&["--help"], &[]).status.code(), Some(0));
}
