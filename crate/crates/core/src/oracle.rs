// SPDX-License-Identifier: Apache-2.0

//! Ground truth by exhaustive enumeration of a function's declared domain.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::harness::TestCase;
use crate::lang::{evaluate, Domain, ExecResult, Program};
use crate::patch::{apply_patch, Patch, PatchError};

pub const DEFAULT_DOMAIN_CAP: u64 = 1_000_000;
pub const MAX_WITNESSES: usize = 10;

pub type Point = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("function `{0}` differs in signature or domains between programs")]
    SignatureMismatch(String),
    #[error("domain has {points} points, above the cap of {cap}")]
    DomainTooLarge { points: u128, cap: u64 },
    #[error(transparent)]
    Patch(#[from] PatchError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainPartition {
    pub function: String,
    pub i_bug: Vec<Point>,
    pub i_correct: Vec<Point>,
    pub total_points: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchFootprint {
    pub i_patch: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatchVerdict {
    Correct,
    AOverfitting,
    BOverfitting,
    Ineffective,
    WrongFix,
}

impl PatchVerdict {
    pub fn name(self) -> &'static str {
        match self {
            PatchVerdict::Correct => "Correct",
            PatchVerdict::AOverfitting => "AOverfitting",
            PatchVerdict::BOverfitting => "BOverfitting",
            PatchVerdict::Ineffective => "Ineffective",
            PatchVerdict::WrongFix => "WrongFix",
        }
    }
}

impl fmt::Display for PatchVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Up to [`MAX_WITNESSES`] points per category, in enumeration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Witnesses {
    /// Buggy points where the patch now agrees with the reference.
    pub fixed: Vec<Point>,
    /// Buggy points still disagreeing with the reference.
    pub unfixed: Vec<Point>,
    /// Previously correct points the patch breaks.
    pub broken: Vec<Point>,
    pub changed: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub verdict: PatchVerdict,
    pub i_bug: usize,
    pub i_patch: usize,
    pub fixed: usize,
    pub broken: usize,
    pub total_points: u64,
    pub witnesses: Witnesses,
}

fn domains_of(a: &Program, b: &Program, fn_name: &str) -> Result<Vec<Domain>, OracleError> {
    let mismatch = || OracleError::SignatureMismatch(fn_name.to_string());
    let fa = a.function(fn_name).ok_or_else(mismatch)?;
    let fb = b.function(fn_name).ok_or_else(mismatch)?;
    let (da, db) = (fa.domains(), fb.domains());
    if da != db {
        return Err(mismatch());
    }
    Ok(da)
}

/// All points of the cross product, lexicographic order.
fn enumerate_points(domains: &[Domain], cap: u64) -> Result<Vec<Point>, OracleError> {
    let total: u128 = domains.iter().map(|d| d.len() as u128).product();
    if total > cap as u128 {
        return Err(OracleError::DomainTooLarge { points: total, cap });
    }
    let mut points = vec![Vec::with_capacity(domains.len())];
    for d in domains {
        points = points
            .into_iter()
            .flat_map(|p| {
                (d.lo..=d.hi).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

fn outcome(p: &Program, fn_name: &str, args: &[i64], step_limit: u64) -> Option<ExecResult> {
    evaluate(p, fn_name, args, step_limit).ok()
}

type Row = (Point, Option<ExecResult>, Option<ExecResult>);

/// Outcomes of both programs at every point.
fn compare(
    a: &Program,
    b: &Program,
    fn_name: &str,
    step_limit: u64,
    cap: u64,
) -> Result<Vec<Row>, OracleError> {
    let domains = domains_of(a, b, fn_name)?;
    let points = enumerate_points(&domains, cap)?;
    Ok(points
        .into_par_iter()
        .map(|pt| {
            let x = outcome(a, fn_name, &pt, step_limit);
            let y = outcome(b, fn_name, &pt, step_limit);
            (pt, x, y)
        })
        .collect())
}

pub fn partition_domain_capped(
    buggy: &Program,
    reference: &Program,
    fn_name: &str,
    step_limit: u64,
    cap: u64,
) -> Result<DomainPartition, OracleError> {
    let rows = compare(buggy, reference, fn_name, step_limit, cap)?;
    let total_points = rows.len() as u64;
    let (i_bug, i_correct): (Vec<_>, Vec<_>) = rows.into_iter().partition(|(_, b, r)| b != r);
    Ok(DomainPartition {
        function: fn_name.to_string(),
        i_bug: i_bug.into_iter().map(|(p, _, _)| p).collect(),
        i_correct: i_correct.into_iter().map(|(p, _, _)| p).collect(),
        total_points,
    })
}

/// Split the domain into points where `buggy` and `reference` disagree
/// (including differing outcome kinds) and the rest.
pub fn partition_domain(
    buggy: &Program,
    reference: &Program,
    fn_name: &str,
    step_limit: u64,
) -> Result<DomainPartition, OracleError> {
    partition_domain_capped(buggy, reference, fn_name, step_limit, DEFAULT_DOMAIN_CAP)
}

/// Points where `patched` behaves differently from `buggy`.
pub fn patch_footprint(
    buggy: &Program,
    patched: &Program,
    fn_name: &str,
    step_limit: u64,
) -> Result<PatchFootprint, OracleError> {
    let p = partition_domain(buggy, patched, fn_name, step_limit)?;
    Ok(PatchFootprint { i_patch: p.i_bug })
}

/// Classify an already patched program.
pub fn classify_program(
    buggy: &Program,
    reference: &Program,
    patched: &Program,
    fn_name: &str,
    step_limit: u64,
) -> Result<Classification, OracleError> {
    let domains = domains_of(buggy, reference, fn_name)?;
    domains_of(buggy, patched, fn_name)?;
    let points = enumerate_points(&domains, DEFAULT_DOMAIN_CAP)?;
    let rows: Vec<(Point, bool, bool, bool)> = points
        .into_par_iter()
        .map(|pt| {
            let b = outcome(buggy, fn_name, &pt, step_limit);
            let r = outcome(reference, fn_name, &pt, step_limit);
            let p = outcome(patched, fn_name, &pt, step_limit);
            let in_bug = b != r;
            let changed = p != b;
            let right = p == r;
            (pt, in_bug, changed, right)
        })
        .collect();
    let mut w = Witnesses::default();
    let (mut i_bug, mut i_patch, mut fixed, mut broken) = (0, 0, 0, 0);
    let push = |v: &mut Vec<Point>, pt: &Point| {
        if v.len() < MAX_WITNESSES {
            v.push(pt.clone());
        }
    };
    for (pt, in_bug, changed, right) in &rows {
        if *changed {
            i_patch += 1;
            push(&mut w.changed, pt);
        }
        if *in_bug {
            i_bug += 1;
            if *right {
                fixed += 1;
                push(&mut w.fixed, pt);
            } else {
                push(&mut w.unfixed, pt);
            }
        } else if !right {
            broken += 1;
            push(&mut w.broken, pt);
        }
    }
    let verdict = if broken == 0 && fixed == i_bug {
        PatchVerdict::Correct
    } else if broken > 0 {
        PatchVerdict::BOverfitting
    } else if i_patch == 0 {
        PatchVerdict::Ineffective
    } else if fixed > 0 {
        PatchVerdict::AOverfitting
    } else {
        PatchVerdict::WrongFix
    };
    Ok(Classification {
        verdict,
        i_bug,
        i_patch,
        fixed,
        broken,
        total_points: rows.len() as u64,
        witnesses: w,
    })
}

pub fn classify(
    buggy: &Program,
    reference: &Program,
    patch: &Patch,
    fn_name: &str,
    step_limit: u64,
) -> Result<Classification, OracleError> {
    let patched = apply_patch(buggy, patch)?;
    classify_program(buggy, reference, &patched, fn_name, step_limit)
}

/// A test whose input lies in the buggy domain and whose expected value is
/// the buggy program's output.
pub fn is_bug_exposing(
    test: &TestCase,
    buggy: &Program,
    reference: &Program,
    step_limit: u64,
) -> Result<bool, OracleError> {
    domains_of(buggy, reference, &test.function)?;
    let b = outcome(buggy, &test.function, &test.args, step_limit);
    let r = outcome(reference, &test.function, &test.args, step_limit);
    Ok(b != r && b == Some(ExecResult::Returned(test.expected)))
}
