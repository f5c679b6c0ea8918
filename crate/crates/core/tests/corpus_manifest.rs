use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use sentinel::category::MATRIX_ROWS;
use sentinel::corpus::{builtin_corpus, load_manifest, materialize_fixture, merge_cases, verify_corpus};

fn repo_manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/manifest.json")
}

#[test]
fn builtin_corpus_verifies_within_budget() {
    let start = Instant::now();
    let cases = builtin_corpus();
    let report = verify_corpus(&cases);
    assert!(start.elapsed() < Duration::from_secs(10), "{:?}", start.elapsed());
    assert!(report.is_clean(), "{:#?}", report.failures);
    let covered: BTreeSet<_> = cases.iter().map(|c| c.category).collect();
    for row in MATRIX_ROWS {
        assert!(covered.contains(&row), "no case for {}", row.id());
    }
}

#[test]
fn shipped_manifest_merges_and_verifies() {
    let extra = load_manifest(&repo_manifest()).expect("shipped manifest loads");
    assert_eq!(extra.len(), 4);
    let builtin = builtin_corpus();
    let n = builtin.len();
    let merged = merge_cases(builtin, extra).expect("ids do not collide");
    assert_eq!(merged.len(), n + 4);
    let report = verify_corpus(&merged);
    assert!(report.is_clean(), "{:#?}", report.failures);
}

#[test]
fn shipped_fixture_tree_materializes() {
    let cases = load_manifest(&repo_manifest()).unwrap();
    let cat = cases.iter().find(|c| c.id == "B1.manifest-cat").unwrap();
    let parent = tempfile::tempdir().unwrap();
    let sandbox = materialize_fixture(cat, parent.path()).expect("fixture builds");
    let notes = sandbox.fs_root().join("data/notes.txt");
    assert_eq!(std::fs::read_to_string(notes).unwrap(), "fixture tree ok\n");
}

#[test]
fn merging_twice_reports_the_duplicate() {
    let extra = load_manifest(&repo_manifest()).unwrap();
    let err = merge_cases(extra.clone(), extra).unwrap_err();
    assert!(err.to_string().contains("A2.manifest-rotl-wrap"), "{err}");
}
