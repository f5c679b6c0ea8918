use proptest::prelude::*;

use sentinel::adapters::ExecutionMode;
use sentinel::category::{Category, MATRIX_ROWS};
use sentinel::oracle::{Verdict, VerdictKind};
use sentinel::pipeline::VerdictRecord;
use sentinel::report::{aggregate, render_json, render_markdown, CellStatus, Metadata, Report, SCHEMA};

fn metadata() -> Metadata {
    Metadata {
        harness_version: "test".into(),
        os: "linux".into(),
        arch: "x86_64".into(),
        timestamp: "2024-01-01T00:00:00Z".into(),
        modes: vec![],
        runtimes: vec![],
    }
}

fn rec(case: &str, cat: Category, rt: &str, mode: ExecutionMode, kind: VerdictKind, detail: &str) -> VerdictRecord {
    VerdictRecord {
        case_id: case.into(),
        category: cat,
        runtime: rt.into(),
        mode,
        verdict: Verdict::new(kind, "Rule", detail),
        command: String::new(),
    }
}

#[test]
fn four_file_operation_failures_render_as_four() {
    let mut records = Vec::new();
    for case in ["B1.a", "B1.b", "B1.c", "B1.d"] {
        for mode in [ExecutionMode::Interpreter, ExecutionMode::Aot] {
            records.push(rec(
                case,
                Category::B1,
                "wasmedge",
                mode,
                VerdictKind::Fail,
                "prints 147",
            ));
        }
    }
    records.push(rec(
        "B1.e",
        Category::B1,
        "wasmedge",
        ExecutionMode::Aot,
        VerdictKind::Pass,
        "",
    ));
    let report = aggregate(&records, metadata());
    let cell = report.matrix.cell(Category::B1, "wasmedge").unwrap();
    assert_eq!(cell.status, CellStatus::Bugs);
    assert_eq!(cell.render(), "4");
    assert!(render_markdown(&report).contains("| [B.1] File operation error | 4 |"));
    assert_eq!(report.failures.len(), 4);
    assert!(report.failures.iter().all(|f| f.modes.len() == 2));
    assert_eq!(report.schema, SCHEMA);
    assert_eq!(report.exit_status(), 1);
}

#[test]
fn rows_follow_the_category_order() {
    let report = aggregate(&[], metadata());
    let cats: Vec<Category> = report.matrix.rows.iter().map(|r| r.category).collect();
    assert_eq!(cats, MATRIX_ROWS);
    assert_eq!(report.exit_status(), 0);
}

#[test]
fn json_round_trips() {
    let records = vec![rec(
        "A2.x",
        Category::A2,
        "wamr",
        ExecutionMode::Aot,
        VerdictKind::Crash,
        "signal 11",
    )];
    let report = aggregate(&records, metadata());
    let text = render_json(&report);
    let back: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(render_json(&back), text);
}

fn kind() -> impl Strategy<Value = VerdictKind> {
    prop::sample::select(vec![
        VerdictKind::Pass,
        VerdictKind::Fail,
        VerdictKind::Crash,
        VerdictKind::Timeout,
        VerdictKind::Skip,
        VerdictKind::Undecided,
    ])
}

fn records() -> impl Strategy<Value = Vec<VerdictRecord>> {
    prop::collection::vec(
        (
            0usize..6,
            prop::sample::select(MATRIX_ROWS.to_vec()),
            prop::sample::select(vec!["wasmer", "wamr", "extra"]),
            prop::sample::select(ExecutionMode::ALL.to_vec()),
            kind(),
            0u8..2,
        )
            .prop_map(|(case, cat, rt, mode, kind, d)| {
                rec(&format!("case{case}"), cat, rt, mode, kind, &format!("detail {d}"))
            }),
        0..30,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn json_is_byte_deterministic(mut recs in records(), seed in any::<u64>()) {
        let a = render_json(&aggregate(&recs, metadata()));
        prop_assert_eq!(&a, &render_json(&aggregate(&recs, metadata())));
        // input order does not matter
        let n = recs.len().max(1);
        recs.rotate_left(seed as usize % n);
        recs.reverse();
        prop_assert_eq!(&a, &render_json(&aggregate(&recs, metadata())));
    }

    #[test]
    fn exit_status_is_sound(recs in records()) {
        let report = aggregate(&recs, metadata());
        let any_bug = recs.iter().any(|r| r.verdict.kind.is_bug());
        prop_assert_eq!(report.exit_status() == 1, any_bug);
        prop_assert_eq!(report.exit_status() == 0, !any_bug);
        prop_assert_eq!(report.summary.verdicts, recs.len());
        let bug_cells: usize = report.matrix.rows.iter().flat_map(|r| &r.cells).map(|c| c.bugs).sum();
        prop_assert_eq!(bug_cells, report.failures.len());
        for f in &report.failures {
            let cell = report.matrix.cell(f.category, &f.runtime).unwrap();
            prop_assert_eq!(cell.status, CellStatus::Bugs);
        }
    }
}
