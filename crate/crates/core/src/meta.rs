// SPDX-License-Identifier: Apache-2.0

//! Test-generation driven overfitting mitigation on top of the two engines.
//!
//! * [`min_impact`] ranks the adequate patches of the generate-and-validate
//!   engine by how many generated regression tests they break.
//! * [`unsat_guided`] feeds generated tests one at a time back into the
//!   synthesis engine, dropping any test under which no patch is found.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::gv::{enumerate_adequate_patches, GvConfig, GvError};
use crate::harness::{count_failing, stabilize, TestCase, TestSuite, DEFAULT_STABILIZE_ROUNDS};
use crate::lang::Program;
use crate::patch::{apply_patch, involved_targets, Patch, PatchError};
use crate::syn::{repair_syn, NoPatchReason, SynConfig, SynError, SynResult};
use crate::testgen::{generate_for_targets, GenError, GeneratorConfig};

/// Lower bound on the initial synthesis cost used to size inner runs.
pub const T_INITIAL_FLOOR: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaError {
    #[error("the manual suite has no failing test")]
    NoFailingTests,
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Patch(#[from] PatchError),
}

impl From<GvError> for MetaError {
    fn from(e: GvError) -> Self {
        match e {
            GvError::NoFailingTests => MetaError::NoFailingTests,
        }
    }
}

impl From<SynError> for MetaError {
    fn from(e: SynError) -> Self {
        match e {
            SynError::NoFailingTests => MetaError::NoFailingTests,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Timings {
    pub repair: Duration,
    pub generation: Duration,
    pub selection: Duration,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetaReport {
    pub returned_patch: Option<Patch>,
    /// Patch produced by the underlying engine alone.
    pub initial_patch: Option<Patch>,
    pub adequate_patches: usize,
    pub generated_tests: usize,
    /// Patch ordinal to failing generated tests.
    pub fail_counts: BTreeMap<usize, usize>,
    pub kept_tests: Vec<TestCase>,
    pub removed_tests: Vec<TestCase>,
    /// Removals whose inner run ended in `Unsat`.
    pub contradiction_tests: Vec<TestCase>,
    /// Budget granted to each inner synthesis run, in call order.
    pub inner_budgets: Vec<u64>,
    pub t_initial: u64,
    /// Evaluation units spent by all engine runs.
    pub engine_cost: u64,
    /// Manual plus retained generated tests (UnsatGuided), or the tests
    /// used to score the returned patch (MinImpact).
    pub final_suite: TestSuite,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaConfig {
    pub gv: GvConfig,
    pub syn: SynConfig,
    pub gen: GeneratorConfig,
    pub stabilize_rounds: usize,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            gv: GvConfig::default(),
            syn: SynConfig::default(),
            gen: GeneratorConfig::default(),
            stabilize_rounds: DEFAULT_STABILIZE_ROUNDS,
        }
    }
}

/// Index of the entry with the fewest failures; the earliest wins ties.
pub fn select_min_impact(fail_counts: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, n) in fail_counts.iter().enumerate() {
        if best.is_none_or(|b| *n < fail_counts[b]) {
            best = Some(i);
        }
    }
    best
}

/// Generated and stabilized regression tests for the functions a patch touches.
pub fn generated_suite(
    program: &Program,
    targets: &[String],
    cfg: &MetaConfig,
) -> Result<TestSuite, MetaError> {
    let raw = generate_for_targets(program, targets, &cfg.gen)?;
    Ok(stabilize(
        program,
        &raw,
        cfg.stabilize_rounds,
        cfg.gen.step_limit,
    ))
}

pub fn min_impact(
    program: &Program,
    manual: &TestSuite,
    cfg: &MetaConfig,
) -> Result<MetaReport, MetaError> {
    let start = Instant::now();
    let run = enumerate_adequate_patches(program, manual, &cfg.gv)?;
    let mut report = MetaReport {
        initial_patch: run.patches.first().cloned(),
        adequate_patches: run.patches.len(),
        engine_cost: run.evals,
        ..MetaReport::default()
    };
    report.timings.repair = start.elapsed();
    if run.patches.len() <= 1 {
        report.returned_patch = run.patches.into_iter().next();
        return Ok(report);
    }

    let start = Instant::now();
    let targets: Vec<Vec<String>> = run
        .patches
        .iter()
        .map(|p| involved_targets(p, program))
        .collect::<Result<_, _>>()?;
    let mut suites: HashMap<Vec<String>, TestSuite> = HashMap::new();
    for t in &targets {
        if !suites.contains_key(t) {
            suites.insert(t.clone(), generated_suite(program, t, cfg)?);
        }
    }
    report.generated_tests = suites.values().map(TestSuite::len).sum();
    report.timings.generation = start.elapsed();

    let start = Instant::now();
    let counts: Vec<usize> = run
        .patches
        .par_iter()
        .zip(&targets)
        .map(|(p, t)| {
            let patched = apply_patch(program, p)?;
            Ok(count_failing(&patched, &suites[t], cfg.gen.step_limit))
        })
        .collect::<Result<_, PatchError>>()?;
    for (p, n) in run.patches.iter().zip(&counts) {
        report.fail_counts.insert(p.meta.ordinal, *n);
    }
    let best = select_min_impact(&counts).expect("at least two patches");
    report.final_suite = suites[&targets[best]].clone();
    report.returned_patch = Some(run.patches[best].clone());
    report.timings.selection = start.elapsed();
    Ok(report)
}

pub fn unsat_guided(
    program: &Program,
    manual: &TestSuite,
    cfg: &MetaConfig,
) -> Result<MetaReport, MetaError> {
    unsat_guided_with(program, manual, cfg, |targets| {
        generated_suite(program, targets, cfg)
    })
}

/// [`unsat_guided`] with the augmentation tests supplied by `generate`,
/// which receives the functions touched by the initial patch.
pub fn unsat_guided_with(
    program: &Program,
    manual: &TestSuite,
    cfg: &MetaConfig,
    generate: impl FnOnce(&[String]) -> Result<TestSuite, MetaError>,
) -> Result<MetaReport, MetaError> {
    let start = Instant::now();
    let initial = repair_syn(program, manual, &cfg.syn)?;
    let mut report = MetaReport {
        engine_cost: initial.cost,
        final_suite: manual.clone(),
        ..MetaReport::default()
    };
    report.timings.repair = start.elapsed();
    let SynResult::Patched(pt_initial) = initial.result else {
        return Ok(report);
    };
    report.initial_patch = Some(pt_initial.clone());
    report.t_initial = initial.cost.max(T_INITIAL_FLOOR);

    let start = Instant::now();
    let targets = involved_targets(&pt_initial, program)?;
    let generated = generate(&targets)?;
    report.generated_tests = generated.len();
    report.timings.generation = start.elapsed();

    let start = Instant::now();
    let inner = SynConfig {
        budget_evals: 2 * report.t_initial,
        ..cfg.syn.clone()
    };
    let mut current = pt_initial;
    let mut augmented = manual.tests.clone();
    for t in generated.tests {
        augmented.push(t.clone());
        report.inner_budgets.push(inner.budget_evals);
        let run = repair_syn(program, &TestSuite::new(augmented.clone()), &inner)?;
        report.engine_cost += run.cost;
        match run.result {
            SynResult::Patched(p) => {
                current = p;
                report.kept_tests.push(t);
            }
            SynResult::NoPatch(reason) => {
                augmented.pop();
                if reason == NoPatchReason::Unsat {
                    report.contradiction_tests.push(t.clone());
                }
                report.removed_tests.push(t);
            }
        }
    }
    report.timings.selection = start.elapsed();
    report.final_suite = TestSuite::new(augmented);
    report.returned_patch = Some(current);
    Ok(report)
}
