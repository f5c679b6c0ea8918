//! Runtime × category matrix, failure records with fix hints, and the
//! markdown/JSON renderings. The JSON layout is documented in
//! `docs/report-schema.md`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::adapters::{ExecutionMode, RuntimeSpec};
use crate::category::{Category, MATRIX_ROWS};
use crate::oracle::VerdictKind;
use crate::pipeline::VerdictRecord;

pub const SCHEMA: &str = "sentinel-report/1";

/// Column order for well-known runtimes; others follow alphabetically.
pub const COLUMN_ORDER: [&str; 5] = ["wasmer", "wasmtime", "wamr", "wasm3", "wasmedge"];

pub const PASS_MARK: &str = "✓";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeInfo {
    pub name: String,
    pub version: String,
    pub modes: Vec<ExecutionMode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub harness_version: String,
    pub os: String,
    pub arch: String,
    pub timestamp: String,
    pub modes: Vec<ExecutionMode>,
    pub runtimes: Vec<RuntimeInfo>,
}

impl Metadata {
    /// Host facts plus the current UTC time.
    pub fn collect(runtimes: &[RuntimeSpec], modes: &[ExecutionMode]) -> Metadata {
        Metadata {
            harness_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            modes: modes.to_vec(),
            runtimes: runtimes
                .iter()
                .map(|r| RuntimeInfo {
                    name: r.name.clone(),
                    version: r.version.clone(),
                    modes: r.modes.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Pass,
    Bugs,
    Undecided,
    Skipped,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub status: CellStatus,
    /// Distinct bugs, timeouts included.
    pub bugs: usize,
    pub timeouts: usize,
    pub pass: usize,
    pub skipped: usize,
    pub undecided: usize,
}

impl Cell {
    pub fn render(&self) -> String {
        match self.status {
            CellStatus::Pass => PASS_MARK.to_string(),
            CellStatus::Bugs if self.timeouts > 0 => format!("{} ({} timeout)", self.bugs, self.timeouts),
            CellStatus::Bugs => self.bugs.to_string(),
            CellStatus::Undecided => "?".to_string(),
            CellStatus::Skipped => format!("skip({})", self.skipped),
            CellStatus::Empty => "-".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub category: Category,
    pub label: String,
    /// Aligned with [`ReportMatrix::columns`].
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<MatrixRow>,
}

impl ReportMatrix {
    pub fn cell(&self, category: Category, runtime: &str) -> Option<&Cell> {
        let col = self.columns.iter().position(|c| c == runtime)?;
        self.rows.iter().find(|r| r.category == category).map(|r| &r.cells[col])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hint {
    pub strategy: String,
    pub frequency: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub case_id: String,
    pub category: Category,
    pub runtime: String,
    pub modes: Vec<ExecutionMode>,
    pub kind: VerdictKind,
    pub rule: String,
    pub detail: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
    pub hints: Vec<Hint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndecidedRecord {
    pub case_id: String,
    pub category: Category,
    pub runtime: String,
    pub mode: ExecutionMode,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub verdicts: usize,
    pub pass: usize,
    pub fail: usize,
    pub crash: usize,
    pub timeout: usize,
    pub skip: usize,
    pub undecided: usize,
    /// Distinct failure records.
    pub bugs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub metadata: Metadata,
    pub matrix: ReportMatrix,
    pub failures: Vec<FailureRecord>,
    pub undecided: Vec<UndecidedRecord>,
    pub summary: Summary,
}

pub fn hints_for(category: Category) -> Vec<Hint> {
    category
        .fix_hints()
        .into_iter()
        .map(|s| Hint {
            strategy: s.name.to_string(),
            frequency: s.frequency.to_string(),
        })
        .collect()
}

fn order_columns(names: BTreeSet<String>) -> Vec<String> {
    let mut cols: Vec<String> = COLUMN_ORDER
        .iter()
        .filter(|n| names.contains(**n))
        .map(|n| n.to_string())
        .collect();
    cols.extend(names.into_iter().filter(|n| !COLUMN_ORDER.contains(&n.as_str())));
    cols
}

/// Builds the matrix. Fail, Crash and Timeout are bugs; failures with the
/// same (case, runtime, kind, rule, detail, excerpts) in several modes are
/// one bug listing every mode.
pub fn aggregate(records: &[VerdictRecord], metadata: Metadata) -> Report {
    let mut names: BTreeSet<String> = metadata.runtimes.iter().map(|r| r.name.clone()).collect();
    names.extend(records.iter().map(|r| r.runtime.clone()));
    let columns = order_columns(names);

    let mut summary = Summary {
        verdicts: records.len(),
        ..Summary::default()
    };
    let mut failures: Vec<FailureRecord> = Vec::new();
    let mut undecided = Vec::new();
    for r in records {
        let v = &r.verdict;
        match v.kind {
            VerdictKind::Pass => summary.pass += 1,
            VerdictKind::Fail => summary.fail += 1,
            VerdictKind::Crash => summary.crash += 1,
            VerdictKind::Timeout => summary.timeout += 1,
            VerdictKind::Skip => summary.skip += 1,
            VerdictKind::Undecided => summary.undecided += 1,
        }
        if v.kind == VerdictKind::Undecided {
            undecided.push(UndecidedRecord {
                case_id: r.case_id.clone(),
                category: r.category,
                runtime: r.runtime.clone(),
                mode: r.mode,
                detail: v.detail.clone(),
            });
        }
        if !v.kind.is_bug() {
            continue;
        }
        let same = failures.iter_mut().find(|f| {
            f.case_id == r.case_id
                && f.category == r.category
                && f.runtime == r.runtime
                && f.kind == v.kind
                && f.rule == v.rule
                && f.detail == v.detail
                && f.expected == v.expected
                && f.actual == v.actual
        });
        match same {
            Some(f) => {
                if !f.modes.contains(&r.mode) {
                    f.modes.push(r.mode);
                    f.modes.sort();
                }
            }
            None => failures.push(FailureRecord {
                case_id: r.case_id.clone(),
                category: r.category,
                runtime: r.runtime.clone(),
                modes: vec![r.mode],
                kind: v.kind,
                rule: v.rule.clone(),
                detail: v.detail.clone(),
                expected: v.expected.clone(),
                actual: v.actual.clone(),
                hints: hints_for(r.category),
            }),
        }
    }
    summary.bugs = failures.len();
    failures.sort_by(|a, b| {
        (
            a.category,
            &a.case_id,
            &a.runtime,
            a.kind.to_string(),
            &a.rule,
            &a.detail,
            &a.expected,
            &a.actual,
        )
            .cmp(&(
                b.category,
                &b.case_id,
                &b.runtime,
                b.kind.to_string(),
                &b.rule,
                &b.detail,
                &b.expected,
                &b.actual,
            ))
    });
    undecided.sort_by(|a, b| {
        (a.category, &a.case_id, &a.runtime, a.mode, &a.detail)
            .cmp(&(b.category, &b.case_id, &b.runtime, b.mode, &b.detail))
    });

    let mut tallies: BTreeMap<(Category, &str), Cell> = BTreeMap::new();
    for r in records {
        let cell = tallies.entry((r.category, r.runtime.as_str())).or_insert(Cell {
            status: CellStatus::Empty,
            bugs: 0,
            timeouts: 0,
            pass: 0,
            skipped: 0,
            undecided: 0,
        });
        match r.verdict.kind {
            VerdictKind::Pass => cell.pass += 1,
            VerdictKind::Skip => cell.skipped += 1,
            VerdictKind::Undecided => cell.undecided += 1,
            _ => {}
        }
    }
    for f in &failures {
        if let Some(cell) = tallies.get_mut(&(f.category, f.runtime.as_str())) {
            cell.bugs += 1;
            if f.kind == VerdictKind::Timeout {
                cell.timeouts += 1;
            }
        }
    }
    let rows = MATRIX_ROWS
        .iter()
        .map(|&category| MatrixRow {
            category,
            label: category.label(),
            cells: columns
                .iter()
                .map(|col| {
                    let mut cell = tallies.get(&(category, col.as_str())).cloned().unwrap_or(Cell {
                        status: CellStatus::Empty,
                        bugs: 0,
                        timeouts: 0,
                        pass: 0,
                        skipped: 0,
                        undecided: 0,
                    });
                    cell.status = if cell.bugs > 0 {
                        CellStatus::Bugs
                    } else if cell.undecided > 0 {
                        CellStatus::Undecided
                    } else if cell.pass > 0 {
                        CellStatus::Pass
                    } else if cell.skipped > 0 {
                        CellStatus::Skipped
                    } else {
                        CellStatus::Empty
                    };
                    cell
                })
                .collect(),
        })
        .collect();

    Report {
        schema: SCHEMA.to_string(),
        metadata,
        matrix: ReportMatrix { columns, rows },
        failures,
        undecided,
        summary,
    }
}

impl Report {
    /// 0 when no Fail, Crash or Timeout was recorded, else 1.
    pub fn exit_status(&self) -> i32 {
        if self.summary.fail + self.summary.crash + self.summary.timeout > 0 {
            1
        } else {
            0
        }
    }
}

pub fn render_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn modes_list(modes: &[ExecutionMode]) -> String {
    modes.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
}

pub fn render_markdown(report: &Report) -> String {
    let m = &report.metadata;
    let mut s = String::new();
    let _ = writeln!(s, "# Runtime bug detection report\n");
    let _ = writeln!(s, "- harness: sentinel {}", m.harness_version);
    let _ = writeln!(s, "- host: {} / {}", m.os, m.arch);
    let _ = writeln!(s, "- generated: {}", m.timestamp);
    let _ = writeln!(
        s,
        "- modes: {}",
        if m.modes.is_empty() {
            "all declared".to_string()
        } else {
            modes_list(&m.modes)
        }
    );
    if m.runtimes.is_empty() {
        let _ = writeln!(s, "- runtimes: none");
    }
    for r in &m.runtimes {
        if r.modes.is_empty() {
            let _ = writeln!(s, "- {} {}", r.name, r.version);
        } else {
            let _ = writeln!(s, "- {} {} ({})", r.name, r.version, modes_list(&r.modes));
        }
    }

    let mx = &report.matrix;
    let _ = writeln!(s, "\n## Matrix\n");
    let _ = writeln!(
        s,
        "{PASS_MARK} passes every mode; a number counts distinct bugs; ? is an undecided vote; skip(n) counts skipped runs.\n"
    );
    let _ = writeln!(s, "| Category | {} |", mx.columns.join(" | "));
    let _ = writeln!(s, "|---|{}", "---|".repeat(mx.columns.len()));
    for row in &mx.rows {
        let cells: Vec<String> = row.cells.iter().map(Cell::render).collect();
        let _ = writeln!(s, "| {} | {} |", md_escape(&row.label), cells.join(" | "));
    }

    let sm = &report.summary;
    let _ = writeln!(s, "\n## Summary\n");
    let _ = writeln!(
        s,
        "{} verdicts: {} pass, {} fail, {} crash, {} timeout, {} skip, {} undecided; {} distinct bugs.",
        sm.verdicts, sm.pass, sm.fail, sm.crash, sm.timeout, sm.skip, sm.undecided, sm.bugs
    );

    let _ = writeln!(s, "\n## Failures\n");
    if report.failures.is_empty() {
        let _ = writeln!(s, "None.");
    }
    for f in &report.failures {
        let _ = writeln!(s, "### {} on {} ({})\n", f.case_id, f.runtime, modes_list(&f.modes));
        let _ = writeln!(s, "- category: {}", f.category.label());
        let _ = writeln!(s, "- verdict: {} by {}", f.kind, f.rule);
        if !f.detail.is_empty() {
            let _ = writeln!(s, "- detail: {}", md_escape(&f.detail));
        }
        if let Some(e) = &f.expected {
            let _ = writeln!(s, "- expected: `{}`", md_escape(e));
        }
        if let Some(a) = &f.actual {
            let _ = writeln!(s, "- actual: `{}`", md_escape(a));
        }
        for h in &f.hints {
            let _ = writeln!(s, "- hint: {} ({})", h.strategy, h.frequency);
        }
        s.push('\n');
    }

    let _ = writeln!(s, "## Undecided\n");
    if report.undecided.is_empty() {
        let _ = writeln!(s, "None.");
    } else {
        let _ = writeln!(s, "| Case | Runtime | Mode | Detail |\n|---|---|---|---|");
        for u in &report.undecided {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                u.case_id,
                u.runtime,
                u.mode,
                md_escape(&u.detail)
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Verdict;

    fn meta() -> Metadata {
        Metadata {
            harness_version: "0".into(),
            os: "linux".into(),
            arch: "x86_64".into(),
            timestamp: "2026-01-01T00:00:00Z".into(),
            modes: vec![],
            runtimes: vec![],
        }
    }

    fn rec(case: &str, cat: Category, rt: &str, mode: ExecutionMode, v: Verdict) -> VerdictRecord {
        VerdictRecord {
            case_id: case.into(),
            category: cat,
            runtime: rt.into(),
            mode,
            verdict: v,
            command: String::new(),
        }
    }

    #[test]
    fn empty_report() {
        let r = aggregate(&[], meta());
        assert_eq!(r.matrix.rows.len(), 19);
        assert!(r.matrix.columns.is_empty());
        assert_eq!(r.exit_status(), 0);
        assert!(render_markdown(&r).contains("generated: 2026-01-01"));
    }

    #[test]
    fn dedup_across_modes() {
        let f = Verdict::new(VerdictKind::Fail, "ExpectedStdout", "expected \"4\" got \"1829\"");
        let recs = vec![
            rec("A2.x", Category::A2, "wamr", ExecutionMode::Interpreter, f.clone()),
            rec("A2.x", Category::A2, "wamr", ExecutionMode::Aot, f),
        ];
        let r = aggregate(&recs, meta());
        assert_eq!(r.failures.len(), 1);
        assert_eq!(
            r.failures[0].modes,
            vec![ExecutionMode::Interpreter, ExecutionMode::Aot]
        );
        assert_eq!(r.matrix.cell(Category::A2, "wamr").unwrap().render(), "1");
        assert_eq!(r.exit_status(), 1);
    }

    #[test]
    fn columns_follow_known_order() {
        assert_eq!(
            order_columns(
                ["zz", "wasmedge", "wasmer", "aa"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect()
            ),
            ["wasmer", "wasmedge", "aa", "zz"]
        );
    }
}
