use std::collections::BTreeMap;

use proptest::prelude::*;

use sentinel::adapters::{RunResult, Termination};
use sentinel::oracle::{judge_determinism, judge_differential, judge_leak, Verdict, VerdictKind, LEAK_MIN_RUNS};

/// Observation of one participant: an output id, a crash, or a timeout.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Obs {
    Out(u8),
    Crash,
    Hang,
}

fn obs() -> impl Strategy<Value = Obs> {
    prop_oneof![8 => (0u8..3).prop_map(Obs::Out), 1 => Just(Obs::Crash), 1 => Just(Obs::Hang)]
}

fn result(o: Obs) -> RunResult {
    match o {
        Obs::Out(v) => RunResult::synthetic(&format!("{v}\n"), Termination::Exit(0)),
        Obs::Crash => RunResult::synthetic("", Termination::Signal(11)),
        Obs::Hang => RunResult::synthetic("", Termination::TimedOut),
    }
}

fn judge(obs: &[Obs]) -> Vec<Verdict> {
    let map: BTreeMap<usize, RunResult> = obs.iter().enumerate().map(|(i, &o)| (i, result(o))).collect();
    judge_differential(&map).into_values().collect()
}

/// Reference vote, written from the rule: strict majority among all
/// participants; crashes and timeouts are reported as such.
fn expected_kinds(obs: &[Obs]) -> Vec<VerdictKind> {
    let n = obs.len();
    let count = |v: u8| obs.iter().filter(|&&o| o == Obs::Out(v)).count();
    let winner = (0u8..3).find(|&v| 2 * count(v) > n);
    obs.iter()
        .map(|&o| match (o, winner) {
            (Obs::Crash, _) => VerdictKind::Crash,
            (Obs::Hang, _) => VerdictKind::Timeout,
            _ if n < 2 => VerdictKind::Undecided,
            (Obs::Out(v), Some(w)) if v == w => VerdictKind::Pass,
            (Obs::Out(_), Some(_)) => VerdictKind::Fail,
            (Obs::Out(_), None) => VerdictKind::Undecided,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_reference_vote(obs in prop::collection::vec(obs(), 1..8)) {
        let kinds: Vec<VerdictKind> = judge(&obs).iter().map(|v| v.kind).collect();
        prop_assert_eq!(kinds, expected_kinds(&obs));
    }

    #[test]
    fn permutation_invariant(
        (obs, perm) in prop::collection::vec(obs(), 1..8)
            .prop_flat_map(|o| { let n = o.len(); (Just(o), Just((0..n).collect::<Vec<_>>()).prop_shuffle()) })
    ) {
        let base = judge(&obs);
        let permuted: Vec<Obs> = perm.iter().map(|&i| obs[i]).collect();
        let after = judge(&permuted);
        for (pos, &orig) in perm.iter().enumerate() {
            prop_assert_eq!(&after[pos], &base[orig]);
        }
    }

    #[test]
    fn majority_monotone(obs in prop::collection::vec(obs(), 2..8), pick in any::<prop::sample::Index>()) {
        let base = judge(&obs);
        let Some(p) = (0..obs.len()).find(|&i| base[i].kind == VerdictKind::Pass) else {
            return Ok(());
        };
        let q = pick.index(obs.len());
        let mut joined = obs.clone();
        joined[q] = obs[p];
        let after = judge(&joined);
        for i in 0..obs.len() {
            if base[i].kind == VerdictKind::Pass || i == q {
                prop_assert_eq!(after[i].kind, VerdictKind::Pass, "participant {}", i);
            }
        }
    }

    #[test]
    fn determinism_flags_distinct_outputs(outs in prop::collection::vec(0u8..3, 2..10)) {
        let results: Vec<RunResult> = outs.iter().map(|&o| result(Obs::Out(o))).collect();
        let distinct = outs.iter().collect::<std::collections::BTreeSet<_>>().len();
        let v = judge_determinism(&results);
        prop_assert_eq!(v.kind == VerdictKind::Fail, distinct >= 2);
    }

    #[test]
    fn flat_memory_is_not_a_leak(noise in prop::collection::vec(0u64..(64 << 10), LEAK_MIN_RUNS..60)) {
        let results: Vec<RunResult> = noise
            .iter()
            .map(|&n| RunResult::synthetic("", Termination::Exit(0)).with_peak((20 << 20) + n))
            .collect();
        prop_assert_eq!(judge_leak(&results, 1024.0 * 1024.0, 0.9).kind, VerdictKind::Pass);
    }

    #[test]
    fn steady_growth_is_a_leak(step in (2u64 << 20)..(8 << 20), runs in LEAK_MIN_RUNS..60) {
        let results: Vec<RunResult> = (0..runs as u64)
            .map(|i| RunResult::synthetic("", Termination::Exit(0)).with_peak((20 << 20) + i * step + (i % 3) * 1000))
            .collect();
        let v = judge_leak(&results, 1024.0 * 1024.0, 0.9);
        prop_assert_eq!(v.kind, VerdictKind::Fail);
        prop_assert_eq!(v.rule.as_str(), "LeakSuspect");
    }
}

#[test]
fn four_one_split_flags_only_the_minority() {
    let outs = ["4", "4", "0", "4", "4"];
    let map: BTreeMap<&str, RunResult> = ["wasmer", "wasmtime", "wamr", "wasm3", "wasmedge"]
        .into_iter()
        .zip(outs)
        .map(|(k, o)| (k, RunResult::synthetic(o, Termination::Exit(0))))
        .collect();
    let v = judge_differential(&map);
    let failed: Vec<&str> = v
        .iter()
        .filter(|(_, v)| v.kind == VerdictKind::Fail)
        .map(|(k, _)| *k)
        .collect();
    assert_eq!(failed, ["wamr"]);
    assert_eq!(v["wamr"].expected.as_deref(), Some("4"));
    assert_eq!(v["wamr"].actual.as_deref(), Some("0"));
    assert!(v.values().filter(|v| v.kind == VerdictKind::Pass).count() == 4);
}

#[test]
fn two_two_split_is_undecided() {
    let map: BTreeMap<u8, RunResult> = [(0, "1"), (1, "1"), (2, "2"), (3, "2")]
        .into_iter()
        .map(|(k, o)| (k, RunResult::synthetic(o, Termination::Exit(0))))
        .collect();
    assert!(judge_differential(&map)
        .values()
        .all(|v| v.kind == VerdictKind::Undecided));
}

#[test]
fn short_leak_series_is_skipped() {
    let results: Vec<RunResult> = (0..LEAK_MIN_RUNS as u64 - 1)
        .map(|i| RunResult::synthetic("", Termination::Exit(0)).with_peak(i << 30))
        .collect();
    assert_eq!(judge_leak(&results, 1.0, 0.5).kind, VerdictKind::Skip);
}
