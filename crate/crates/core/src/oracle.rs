//! Verdicts from observed runs: single-run oracles, leak trends, and
//! majority voting across (runtime, mode) participants.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adapters::{RunResult, Stage};
use crate::corpus::{OracleSpec, SandboxHandle, StdoutExpectation, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Pass,
    Fail,
    Crash,
    Timeout,
    Skip,
    Undecided,
}

impl VerdictKind {
    /// Counted as a bug in the matrix.
    pub fn is_bug(self) -> bool {
        matches!(self, VerdictKind::Fail | VerdictKind::Crash | VerdictKind::Timeout)
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Pass => "pass",
            VerdictKind::Fail => "fail",
            VerdictKind::Crash => "crash",
            VerdictKind::Timeout => "timeout",
            VerdictKind::Skip => "skip",
            VerdictKind::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Oracle or rule that decided, e.g. `ExpectedStdout` or `Differential`.
    pub rule: String,
    pub detail: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
    /// Indices of the judged runs (repeat numbers).
    pub evidence: Vec<usize>,
}

impl Verdict {
    pub fn new(kind: VerdictKind, rule: &str, detail: impl Into<String>) -> Verdict {
        Verdict {
            kind,
            rule: rule.to_string(),
            detail: detail.into(),
            expected: None,
            actual: None,
            evidence: Vec::new(),
        }
    }

    pub fn pass(rule: &str) -> Verdict {
        Verdict::new(VerdictKind::Pass, rule, "")
    }

    pub fn skip(reason: impl Into<String>) -> Verdict {
        Verdict::new(VerdictKind::Skip, "Skip", reason)
    }

    fn compare(mut self, expected: impl Into<String>, actual: impl Into<String>) -> Verdict {
        self.expected = Some(expected.into());
        self.actual = Some(actual.into());
        self
    }

    fn on(mut self, evidence: Vec<usize>) -> Verdict {
        self.evidence = evidence;
        self
    }
}

/// Longest excerpt of program output kept in a verdict.
pub const EXCERPT_LEN: usize = 200;

pub fn excerpt(s: &str) -> String {
    let s = s.trim();
    if s.chars().count() <= EXCERPT_LEN {
        return s.to_string();
    }
    let mut out: String = s.chars().take(EXCERPT_LEN).collect();
    out.push_str("...");
    out
}

/// Trims trailing whitespace from every line and the whole text, and
/// leading whitespace from the whole text.
pub fn normalize_stdout(bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes).replace("\r\n", "\n");
    let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    lines.join("\n").trim().to_string()
}

fn diagnostic(r: &RunResult) -> String {
    let err = r.stderr_text();
    if err.trim().is_empty() {
        r.stdout_text()
    } else {
        err
    }
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

/// Applies the case's non-differential oracles to its repeated runs (the
/// last run is the one judged for output; `sandbox` is the last run's).
///
/// Order: signal, timeout, then each oracle as listed. Cases whose only
/// oracle is Differential get a `Pass` with rule `none`.
pub fn judge_single(results: &[RunResult], case: &TestCase, sandbox: Option<&SandboxHandle>) -> Verdict {
    let Some(last) = results.last() else {
        return Verdict::skip("no runs");
    };
    let last_idx = results.len() - 1;
    for (i, r) in results.iter().enumerate() {
        if let Some(sig) = r.crash_signal() {
            return Verdict::new(
                VerdictKind::Crash,
                "Signal",
                format!("{} in repeat {i}", r.describe_termination()),
            )
            .compare("no signal", format!("signal {sig}"))
            .on(vec![i]);
        }
    }
    for (i, r) in results.iter().enumerate() {
        if r.timed_out() {
            return Verdict::new(VerdictKind::Timeout, "Timeout", r.describe_termination()).on(vec![i]);
        }
    }

    let expects_rejection =
        case.has_oracle(|o| matches!(o, OracleSpec::ExpectError { .. } | OracleSpec::ExpectInvalid));
    if last.stage == Stage::Precompile && !expects_rejection {
        return Verdict::new(VerdictKind::Fail, "Precompile", "AoT compilation failed")
            .compare("native code generated", excerpt(&diagnostic(last)))
            .on(vec![last_idx]);
    }

    let mut applied = false;
    for oracle in &case.oracles {
        let rule = oracle.name();
        let fail = |detail: String| Verdict::new(VerdictKind::Fail, rule, detail).on(vec![last_idx]);
        match oracle {
            OracleSpec::Differential => continue,
            OracleSpec::ExpectTrap { substring } => {
                let diag = diagnostic(last);
                if last.exit_code() == Some(0) {
                    return fail("exited 0 where a trap was expected".into())
                        .compare(format!("trap mentioning `{substring}`"), excerpt(&last.stdout_text()));
                }
                if !contains_ci(&diag, substring) {
                    return fail(format!("trap diagnostic lacks `{substring}`"))
                        .compare(format!("trap mentioning `{substring}`"), excerpt(&diag));
                }
            }
            OracleSpec::ExpectError { substring } => {
                let diag = diagnostic(last);
                if last.exit_code() == Some(0) {
                    return fail("exited 0 where an error was expected".into())
                        .compare("error diagnostic", excerpt(&last.stdout_text()));
                }
                if diag.trim().is_empty() {
                    return fail("nonzero exit without a diagnostic".into())
                        .compare("error diagnostic", last.describe_termination());
                }
                if !contains_ci(&diag, substring) {
                    return fail(format!("diagnostic lacks `{substring}`"))
                        .compare(format!("error mentioning `{substring}`"), excerpt(&diag));
                }
            }
            OracleSpec::ExpectValid => {
                if !last.succeeded() {
                    return fail("valid module rejected".into()).compare(
                        "accepted",
                        format!("{}: {}", last.describe_termination(), excerpt(&diagnostic(last))),
                    );
                }
            }
            OracleSpec::ExpectInvalid => {
                if last.exit_code() == Some(0) && last.stage == Stage::Run {
                    return fail("invalid module accepted".into()).compare("rejected", "exit 0");
                }
                if diagnostic(last).trim().is_empty() {
                    return fail("rejected without a diagnostic".into())
                        .compare("validation error", last.describe_termination());
                }
            }
            OracleSpec::ExpectedStdout { expect } => {
                let want = match expect {
                    StdoutExpectation::Text(t) => normalize_stdout(t.as_bytes()),
                    StdoutExpectation::Values(_) => expect.rendered(),
                };
                let got = normalize_stdout(&last.stdout);
                if !last.succeeded() {
                    return fail(format!("{} where output was expected", last.describe_termination()))
                        .compare(want, excerpt(&format!("{got}\n{}", last.stderr_text())));
                }
                if got != want {
                    return fail(format!("expected {want:?} got {:?}", excerpt(&got))).compare(want, excerpt(&got));
                }
            }
            OracleSpec::FilesystemState { assertions } => {
                let Some(sb) = sandbox else {
                    return Verdict::skip("filesystem state needs the sandbox");
                };
                let failures = sb.check_assertions(assertions);
                if !failures.is_empty() {
                    let expected = assertions
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join("; ");
                    return fail(failures.join("; ")).compare(expected, failures.join("; "));
                }
            }
            OracleSpec::Determinism => {
                let v = judge_determinism(results);
                if v.kind == VerdictKind::Fail {
                    return v;
                }
            }
            OracleSpec::LeakTrend {
                threshold_bytes_per_iter,
                min_correlation,
            } => {
                let v = judge_leak(results, *threshold_bytes_per_iter, *min_correlation);
                match v.kind {
                    VerdictKind::Fail => return v,
                    VerdictKind::Skip => continue,
                    _ => {}
                }
            }
        }
        applied = true;
    }
    if applied {
        Verdict::pass("all")
    } else {
        Verdict::pass("none")
    }
}

/// Fails when the repeats printed at least two distinct stdouts.
pub fn judge_determinism(results: &[RunResult]) -> Verdict {
    let outputs: Vec<String> = results.iter().map(|r| normalize_stdout(&r.stdout)).collect();
    let mut distinct: Vec<&String> = Vec::new();
    for o in &outputs {
        if !distinct.contains(&o) {
            distinct.push(o);
        }
    }
    if distinct.len() <= 1 {
        return Verdict::pass("Determinism");
    }
    let first = &outputs[0];
    let odd: Vec<usize> = (0..outputs.len()).filter(|&i| outputs[i] != *first).collect();
    let shown = distinct
        .iter()
        .map(|d| format!("{:?}", excerpt(d)))
        .collect::<Vec<_>>()
        .join(", ");
    Verdict::new(
        VerdictKind::Fail,
        "Determinism",
        format!(
            "{} distinct outputs over {} repeats: {shown}",
            distinct.len(),
            outputs.len()
        ),
    )
    .compare(excerpt(first), excerpt(&outputs[odd[0]]))
    .on(odd)
}

/// Minimum repeats for a leak judgment.
pub const LEAK_MIN_RUNS: usize = 10;

/// Least-squares slope (bytes per iteration) and Pearson correlation of
/// peak memory against the iteration index.
pub fn leak_trend(series: &[f64]) -> (f64, f64) {
    let n = series.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = series.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &y) in series.iter().enumerate() {
        let dx = i as f64 - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let r = if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    };
    (slope, r)
}

/// Fails iff peak memory rises faster than `threshold` bytes per iteration
/// with correlation at least `min_correlation`.
pub fn judge_leak(results: &[RunResult], threshold: f64, min_correlation: f64) -> Verdict {
    let series: Option<Vec<f64>> = results.iter().map(|r| r.peak_memory.map(|b| b as f64)).collect();
    let Some(series) = series else {
        return Verdict::skip("peak memory unavailable");
    };
    if series.len() < LEAK_MIN_RUNS {
        return Verdict::skip(format!("{} runs, need {LEAK_MIN_RUNS}", series.len()));
    }
    let (slope, r) = leak_trend(&series);
    let detail = format!("slope {:.0} B/iter, r = {r:.3} over {} runs", slope, series.len());
    if slope > threshold && r >= min_correlation {
        Verdict::new(VerdictKind::Fail, "LeakSuspect", detail)
            .compare(format!("slope <= {threshold:.0} B/iter"), format!("{slope:.0} B/iter"))
            .on((0..series.len()).collect())
    } else {
        Verdict::new(VerdictKind::Pass, "LeakTrend", detail)
    }
}

/// Majority vote over participants' final runs. Crashes and timeouts keep
/// their verdicts and never join a group, but count as participants.
pub fn judge_differential<K: Ord + Clone>(results: &BTreeMap<K, RunResult>) -> BTreeMap<K, Verdict> {
    let mut out = BTreeMap::new();
    let mut groups: BTreeMap<String, Vec<&K>> = BTreeMap::new();
    for (k, r) in results {
        if let Some(sig) = r.crash_signal() {
            out.insert(
                k.clone(),
                Verdict::new(VerdictKind::Crash, "Signal", format!("signal {sig}")),
            );
        } else if r.timed_out() {
            out.insert(
                k.clone(),
                Verdict::new(VerdictKind::Timeout, "Timeout", r.describe_termination()),
            );
        } else if r.succeeded() {
            groups.entry(normalize_stdout(&r.stdout)).or_default().push(k);
        }
    }
    let n = results.len();
    let majority = groups.iter().find(|(_, members)| 2 * members.len() > n);
    if n < 2 {
        for k in results.keys() {
            out.entry(k.clone())
                .or_insert_with(|| Verdict::new(VerdictKind::Undecided, "Differential", "fewer than two participants"));
        }
        return out;
    }
    match majority {
        Some((output, members)) => {
            for (k, r) in results {
                if out.contains_key(k) {
                    continue;
                }
                let v = if members.contains(&k) {
                    Verdict::pass("Differential")
                } else {
                    let actual = if r.succeeded() {
                        excerpt(&normalize_stdout(&r.stdout))
                    } else {
                        r.describe_termination()
                    };
                    Verdict::new(
                        VerdictKind::Fail,
                        "Differential",
                        format!("{}/{n} participants agree on {:?}", members.len(), excerpt(output)),
                    )
                    .compare(excerpt(output), actual)
                };
                out.insert(k.clone(), v);
            }
        }
        None => {
            let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
            for k in results.keys() {
                out.entry(k.clone()).or_insert_with(|| {
                    Verdict::new(
                        VerdictKind::Undecided,
                        "Differential",
                        format!("no strict majority among {n} participants (groups {sizes:?})"),
                    )
                });
            }
        }
    }
    out
}

/// Final verdict of one participant. Single-run crash, timeout and fail
/// dominate; then a differential fail; then the single-run pass when some
/// non-differential oracle applied; otherwise the differential outcome.
pub fn combine(single: Verdict, differential: Option<Verdict>) -> Verdict {
    if matches!(
        single.kind,
        VerdictKind::Crash | VerdictKind::Timeout | VerdictKind::Fail | VerdictKind::Skip
    ) {
        return single;
    }
    match differential {
        Some(d) if d.kind == VerdictKind::Fail => d,
        _ if single.rule != "none" => single,
        Some(d) => d,
        None => single,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::Termination;

    fn ok(s: &str) -> RunResult {
        RunResult::synthetic(s, Termination::Exit(0))
    }

    #[test]
    fn rotr_four_one_split() {
        let results: BTreeMap<&str, RunResult> = [
            ("wasmer", ok("4")),
            ("wasmtime", ok("4\n")),
            ("wamr", ok("1829")),
            ("wasm3", ok("4")),
            ("wasmedge", ok("4")),
        ]
        .into_iter()
        .collect();
        let v = judge_differential(&results);
        assert_eq!(v["wamr"].kind, VerdictKind::Fail);
        assert_eq!(v["wamr"].expected.as_deref(), Some("4"));
        for k in ["wasmer", "wasmtime", "wasm3", "wasmedge"] {
            assert_eq!(v[k].kind, VerdictKind::Pass, "{k}");
        }
    }

    #[test]
    fn two_two_split_is_undecided() {
        let results: BTreeMap<&str, RunResult> = [("a", ok("1")), ("b", ok("1")), ("c", ok("2")), ("d", ok("2"))]
            .into_iter()
            .collect();
        assert!(judge_differential(&results)
            .values()
            .all(|v| v.kind == VerdictKind::Undecided));
    }

    #[test]
    fn crash_keeps_verdict() {
        let results: BTreeMap<&str, RunResult> = [
            ("a", ok("1")),
            ("b", ok("1")),
            ("c", RunResult::synthetic("", Termination::Signal(11))),
        ]
        .into_iter()
        .collect();
        let v = judge_differential(&results);
        assert_eq!(v["c"].kind, VerdictKind::Crash);
        assert_eq!(v["a"].kind, VerdictKind::Pass);
    }

    #[test]
    fn leak_series() {
        let flat: Vec<_> = (0..50).map(|_| ok("").with_peak(40 << 20)).collect();
        assert_eq!(judge_leak(&flat, 1048576.0, 0.9).kind, VerdictKind::Pass);
        let rising: Vec<_> = (0..50).map(|i| ok("").with_peak((40 << 20) + i * (2 << 20))).collect();
        assert_eq!(judge_leak(&rising, 1048576.0, 0.9).kind, VerdictKind::Fail);
        let absent: Vec<_> = (0..50).map(|_| ok("")).collect();
        assert_eq!(judge_leak(&absent, 1048576.0, 0.9).kind, VerdictKind::Skip);
    }

    #[test]
    fn combine_order() {
        let fail = Verdict::new(VerdictKind::Fail, "Differential", "x");
        assert_eq!(
            combine(Verdict::pass("all"), Some(fail.clone())).kind,
            VerdictKind::Fail
        );
        let crash = Verdict::new(VerdictKind::Crash, "Signal", "");
        assert_eq!(
            combine(crash, Some(Verdict::pass("Differential"))).kind,
            VerdictKind::Crash
        );
        let und = Verdict::new(VerdictKind::Undecided, "Differential", "");
        assert_eq!(combine(Verdict::pass("all"), Some(und.clone())).kind, VerdictKind::Pass);
        assert_eq!(combine(Verdict::pass("none"), Some(und)).kind, VerdictKind::Undecided);
    }
}
