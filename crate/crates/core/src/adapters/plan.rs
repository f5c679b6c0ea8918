use crate::corpus::{Feature, TestCase};

use super::config::ExecutionMode;
use super::probe::Support;
use super::RuntimeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanItem {
    pub case: usize,
    pub runtime: usize,
    pub mode: ExecutionMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipItem {
    pub case: usize,
    pub runtime: usize,
    pub mode: ExecutionMode,
    pub reason: String,
}

/// Every (case, runtime, mode) triple, split into runnable and skipped.
/// Indices refer to the slices passed to [`build_plan`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionPlan {
    pub items: Vec<PlanItem>,
    pub skipped: Vec<SkipItem>,
}

/// `modes` restricts the modes considered; runtimes lacking a requested
/// mode simply do not take part in it.
pub fn build_plan(
    cases: &[TestCase],
    runtimes: &[RuntimeSpec],
    modes: Option<&[ExecutionMode]>,
    mut support: impl FnMut(&RuntimeSpec, ExecutionMode, Feature) -> Support,
) -> ExecutionPlan {
    let mut plan = ExecutionPlan::default();
    for (ci, case) in cases.iter().enumerate() {
        for (ri, rt) in runtimes.iter().enumerate() {
            for &mode in &rt.modes {
                if modes.is_some_and(|m| !m.contains(&mode)) {
                    continue;
                }
                let mut reason = None;
                if case.invoke.is_some() && rt.templates[&mode].invoke.is_none() {
                    reason = Some("runtime cannot invoke exports".to_string());
                }
                for &flag in &case.features {
                    if reason.is_some() {
                        break;
                    }
                    if let Support::Unsupported(why) = support(rt, mode, flag) {
                        reason = Some(format!("{flag} unsupported: {why}"));
                    }
                }
                match reason {
                    Some(reason) => plan.skipped.push(SkipItem {
                        case: ci,
                        runtime: ri,
                        mode,
                        reason,
                    }),
                    None => plan.items.push(PlanItem {
                        case: ci,
                        runtime: ri,
                        mode,
                    }),
                }
            }
        }
    }
    plan
}
