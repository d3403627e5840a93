// SPDX-License-Identifier: Apache-2.0

//! Synthesis-based repair of conditions and missing preconditions.

pub mod angelic;
pub mod synth;

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use angelic::{
    mine_angelic_values, mine_site, repair_sites, AngelicRecord, Constraint, RepairSite, Sample,
    SiteKind,
};
pub use synth::{search, synthesize_condition, Budget, SynthOutcome, SynthesisSpec};

use crate::harness::{all_pass, TestSuite};
use crate::lang::{Program, DEFAULT_STEP_LIMIT};
use crate::patch::{apply_patch, localize, Engine, LocalizeError, Patch};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynConfig {
    /// Synthesis candidates plus patch validations.
    pub budget_evals: u64,
    pub wall_clock: Option<Duration>,
    pub step_limit: u64,
}

impl Default for SynConfig {
    fn default() -> Self {
        Self {
            budget_evals: 5_000,
            wall_clock: None,
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoPatchReason {
    Unsat,
    Timeout,
    NoAngelicFix,
}

impl NoPatchReason {
    pub fn tag(self) -> &'static str {
        match self {
            NoPatchReason::Unsat => "unsat",
            NoPatchReason::Timeout => "timeout",
            NoPatchReason::NoAngelicFix => "no-angelic-fix",
        }
    }
}

impl fmt::Display for NoPatchReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynResult {
    Patched(Patch),
    NoPatch(NoPatchReason),
}

impl SynResult {
    pub fn patch(&self) -> Option<&Patch> {
        match self {
            SynResult::Patched(p) => Some(p),
            SynResult::NoPatch(_) => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SynResult::Patched(_) => "patched",
            SynResult::NoPatch(r) => r.tag(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynRun {
    pub result: SynResult,
    /// Units spent.
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynError {
    #[error("the suite has no failing test")]
    NoFailingTests,
}

/// Two tests on the same input expecting different outputs.
fn conflicting_tests(suite: &TestSuite) -> bool {
    let mut seen: HashMap<(&str, &[i64]), i64> = HashMap::new();
    suite.iter().any(|t| {
        *seen
            .entry((t.function.as_str(), t.args.as_slice()))
            .or_insert(t.expected)
            != t.expected
    })
}

/// Try repair sites in descending suspiciousness; the first adequate
/// synthesized patch wins.
pub fn repair_syn(
    program: &Program,
    suite: &TestSuite,
    cfg: &SynConfig,
) -> Result<SynRun, SynError> {
    let ranking = localize(program, suite, cfg.step_limit).map_err(|e| match e {
        LocalizeError::NoFailingTests => SynError::NoFailingTests,
    })?;
    if conflicting_tests(suite) {
        return Ok(SynRun {
            result: SynResult::NoPatch(NoPatchReason::Unsat),
            cost: 0,
        });
    }
    let mut budget = Budget::new(cfg.budget_evals);
    budget.deadline = cfg.wall_clock.map(|w| Instant::now() + w);
    let constants = program.int_constants();
    let mut had_records = false;
    for site in repair_sites(program, &ranking) {
        let Some(record) = mine_site(program, suite, site, cfg.step_limit) else {
            continue;
        };
        had_records = true;
        let variables = program.scope_at(site.node).unwrap_or_default();
        let spec = SynthesisSpec::with_constants(record.samples, variables, &constants);
        let mut found = None;
        let outcome = search(&spec, &mut budget, &mut |expr, budget| {
            if !budget.take() {
                return false;
            }
            let patch = Patch::new(vec![site.edit(expr.clone())], Engine::Synthesis, 1);
            match apply_patch(program, &patch) {
                Ok(patched) if all_pass(&patched, suite, cfg.step_limit) => {
                    found = Some(patch);
                    true
                }
                _ => false,
            }
        });
        match outcome {
            SynthOutcome::Found(_) => {
                let mut patch = found.expect("accepted candidate has a patch");
                patch.meta.discovered_at = budget.used;
                return Ok(SynRun {
                    result: SynResult::Patched(patch),
                    cost: budget.used,
                });
            }
            SynthOutcome::Timeout => {
                return Ok(SynRun {
                    result: SynResult::NoPatch(NoPatchReason::Timeout),
                    cost: budget.used,
                })
            }
            SynthOutcome::Unsat => {}
        }
    }
    let reason = if had_records {
        NoPatchReason::Unsat
    } else {
        NoPatchReason::NoAngelicFix
    };
    Ok(SynRun {
        result: SynResult::NoPatch(reason),
        cost: budget.used,
    })
}

#[cfg(test)]
mod tests;
