//! Plan, execute and judge a corpus against discovered runtimes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::{
    build_plan, execute, ExecuteError, ExecutionMode, Prober, RunResult, RuntimeSpec, DEFAULT_TIMEOUT,
};
use crate::category::Category;
use crate::corpus::{materialize_fixture, FixtureError, OracleSpec, TestCase};
use crate::oracle::{combine, judge_differential, judge_single, Verdict};

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Restrict to these modes; `None` runs every declared mode.
    pub modes: Option<Vec<ExecutionMode>>,
    pub timeout: Duration,
    pub jobs: usize,
    /// Parent of per-run sandboxes; a temporary directory when `None`.
    pub work_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            modes: None,
            timeout: DEFAULT_TIMEOUT,
            jobs: std::thread::available_parallelism().map_or(4, |n| n.get()),
            work_dir: None,
        }
    }
}

/// One judged (case, runtime, mode) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub case_id: String,
    pub category: Category,
    pub runtime: String,
    pub mode: ExecutionMode,
    pub verdict: Verdict,
    /// Command line of the judged run; empty for skips.
    #[serde(default)]
    pub command: String,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot create work directory: {0}")]
    WorkDir(std::io::Error),
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    pub records: Vec<VerdictRecord>,
    /// Harness-side failures (spawn errors, unwritable sandboxes).
    pub errors: Vec<String>,
    pub executions: usize,
}

struct Judged {
    case: usize,
    runtime: usize,
    mode: ExecutionMode,
    last: RunResult,
    single: Verdict,
}

#[derive(Debug, Error)]
enum RunError {
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Execute(#[from] ExecuteError),
}

fn run_repeats(
    case: &TestCase,
    rt: &RuntimeSpec,
    mode: ExecutionMode,
    work: &std::path::Path,
    timeout: Duration,
) -> Result<(RunResult, Verdict), RunError> {
    let mut results = Vec::with_capacity(case.repeats as usize);
    let mut sandbox = None;
    for _ in 0..case.repeats.max(1) {
        // every repeat starts from a pristine tree
        let sb = materialize_fixture(case, work)?;
        results.push(execute(rt, mode, case, &sb, timeout)?);
        sandbox = Some(sb);
    }
    let single = judge_single(&results, case, sandbox.as_ref());
    Ok((results.pop().expect("at least one repeat"), single))
}

pub fn run_pipeline(
    cases: &[TestCase],
    runtimes: &[RuntimeSpec],
    opts: &RunOptions,
) -> Result<PipelineOutput, PipelineError> {
    let temp;
    let work = match &opts.work_dir {
        Some(p) => {
            std::fs::create_dir_all(p).map_err(PipelineError::WorkDir)?;
            p.clone()
        }
        None => {
            temp = tempfile::Builder::new()
                .prefix("sentinel-")
                .tempdir()
                .map_err(PipelineError::WorkDir)?;
            temp.path().to_path_buf()
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build()?;
    let prober = Prober::new(&work, opts.timeout);
    let modes = opts.modes.as_deref();

    // probe every needed (runtime, mode, feature) once, in parallel
    let features: BTreeSet<_> = cases.iter().flat_map(|c| c.features.iter().copied()).collect();
    let probes: Vec<_> = runtimes
        .iter()
        .flat_map(|rt| rt.modes.iter().map(move |&m| (rt, m)))
        .filter(|(_, m)| modes.is_none_or(|ms| ms.contains(m)))
        .flat_map(|(rt, m)| features.iter().map(move |&f| (rt, m, f)))
        .collect();
    pool.install(|| {
        probes.par_iter().for_each(|&(rt, m, f)| {
            prober.support(rt, m, f);
        })
    });

    let plan = build_plan(cases, runtimes, modes, |rt, m, f| prober.support(rt, m, f));

    let outcomes: Vec<Result<Judged, String>> = pool.install(|| {
        plan.items
            .par_iter()
            .map(|item| {
                let case = &cases[item.case];
                let rt = &runtimes[item.runtime];
                run_repeats(case, rt, item.mode, &work, opts.timeout)
                    .map(|(last, single)| Judged {
                        case: item.case,
                        runtime: item.runtime,
                        mode: item.mode,
                        last,
                        single,
                    })
                    .map_err(|e| format!("{} on {}/{}: {e}", case.id, rt.name, item.mode))
            })
            .collect()
    });

    let mut out = PipelineOutput::default();
    let mut by_case: BTreeMap<usize, Vec<Judged>> = BTreeMap::new();
    for o in outcomes {
        match o {
            Ok(j) => {
                out.executions += cases[j.case].repeats.max(1) as usize;
                by_case.entry(j.case).or_default().push(j);
            }
            Err(e) => out.errors.push(e),
        }
    }

    let mut records = Vec::new();
    for (ci, judged) in by_case {
        let case = &cases[ci];
        let differential = if case.has_oracle(|o| matches!(o, OracleSpec::Differential)) {
            let participants: BTreeMap<(usize, ExecutionMode), RunResult> =
                judged.iter().map(|j| ((j.runtime, j.mode), j.last.clone())).collect();
            Some(judge_differential(&participants))
        } else {
            None
        };
        for j in judged {
            let d = differential.as_ref().and_then(|d| d.get(&(j.runtime, j.mode)).cloned());
            records.push((
                (ci, j.runtime, j.mode),
                VerdictRecord {
                    case_id: case.id.clone(),
                    category: case.category,
                    runtime: runtimes[j.runtime].name.clone(),
                    mode: j.mode,
                    verdict: combine(j.single, d),
                    command: j.last.command.clone(),
                },
            ));
        }
    }
    for s in &plan.skipped {
        records.push((
            (s.case, s.runtime, s.mode),
            VerdictRecord {
                case_id: cases[s.case].id.clone(),
                category: cases[s.case].category,
                runtime: runtimes[s.runtime].name.clone(),
                mode: s.mode,
                verdict: Verdict::skip(s.reason.clone()),
                command: String::new(),
            },
        ));
    }
    records.sort_by_key(|(k, _)| *k);
    out.records = records.into_iter().map(|(_, r)| r).collect();
    Ok(out)
}
