// SPDX-License-Identifier: Apache-2.0

//! Enumerative condition synthesis over a small predicate grammar.
//!
//! Candidates are visited smallest first (node count). Within one size the
//! order is: atoms, then conjunctions, then disjunctions. Atoms are
//! `left op right` where `right` precedes `left` in term order (constants,
//! then variables, then derived terms) and `op` runs through
//! `< <= > >= == !=`. Constants are ordered by absolute value, positive
//! first. Pairs of atoms follow atom order lexicographically.

use std::collections::HashMap;
use std::time::Instant;

use super::angelic::Sample;
use crate::lang::{BinOp, Expr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisSpec {
    pub samples: Vec<Sample>,
    pub variables: Vec<String>,
    pub constants: Vec<i64>,
}

impl SynthesisSpec {
    /// Canonical constant order: `0, 1, -1, 2, -2, ...` restricted to the
    /// given values, duplicates removed.
    pub fn with_constants(
        samples: Vec<Sample>,
        variables: Vec<String>,
        program_constants: &[i64],
    ) -> Self {
        let mut constants: Vec<i64> = program_constants
            .iter()
            .copied()
            .chain([-1, 0, 1])
            .collect();
        constants.sort_by_key(|c| (c.unsigned_abs(), *c < 0));
        constants.dedup();
        Self {
            samples,
            variables,
            constants,
        }
    }

    /// Two samples agreeing on every variable but demanding different values.
    pub fn is_consistent(&self) -> bool {
        let mut seen: HashMap<Vec<i64>, bool> = HashMap::new();
        for s in &self.samples {
            let key: Vec<i64> = self
                .variables
                .iter()
                .map(|v| s.get(v).unwrap_or(0))
                .collect();
            if *seen.entry(key).or_insert(s.value) != s.value {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthOutcome {
    Found(Expr),
    Unsat,
    Timeout,
}

/// Shared cost counter for one repair attempt.
#[derive(Debug, Clone)]
pub struct Budget {
    pub used: u64,
    pub limit: u64,
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Self {
            used: 0,
            limit,
            deadline: None,
        }
    }

    /// Spend one unit; false when nothing is left.
    pub fn take(&mut self) -> bool {
        if self.used >= self.limit || self.deadline.is_some_and(|d| Instant::now() >= d) {
            return false;
        }
        self.used += 1;
        true
    }
}

struct Term {
    expr: Expr,
    constant: bool,
    values: Vec<i64>,
}

struct Atom {
    expr: Expr,
    size: usize,
    bits: Vec<u64>,
}

fn terms(spec: &SynthesisSpec) -> Vec<Term> {
    let n = spec.samples.len();
    let mut out: Vec<Term> = spec
        .constants
        .iter()
        .map(|c| Term {
            expr: Expr::int(*c),
            constant: true,
            values: vec![*c; n],
        })
        .collect();
    let vars: Vec<Vec<i64>> = spec
        .variables
        .iter()
        .map(|v| spec.samples.iter().map(|s| s.get(v).unwrap_or(0)).collect())
        .collect();
    for (v, vals) in spec.variables.iter().zip(&vars) {
        out.push(Term {
            expr: Expr::var(v),
            constant: false,
            values: vals.clone(),
        });
    }
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            let (a, b) = (&spec.variables[i], &spec.variables[j]);
            for op in [BinOp::Mul, BinOp::Sub] {
                let values = vars[i]
                    .iter()
                    .zip(&vars[j])
                    .map(|(x, y)| match op {
                        BinOp::Mul => x.wrapping_mul(*y),
                        _ => x.wrapping_sub(*y),
                    })
                    .collect();
                out.push(Term {
                    expr: Expr::binary(op, Expr::var(a), Expr::var(b)),
                    constant: false,
                    values,
                });
            }
        }
    }
    out
}

fn bitset(values: impl Iterator<Item = bool>, n: usize) -> Vec<u64> {
    let mut bits = vec![0u64; n.div_ceil(64)];
    for (i, v) in values.enumerate() {
        if v {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    bits
}

fn atoms(spec: &SynthesisSpec) -> Vec<Atom> {
    let n = spec.samples.len();
    let terms = terms(spec);
    let mut out = Vec::new();
    for (li, l) in terms.iter().enumerate() {
        if l.constant {
            continue;
        }
        for r in &terms[..li] {
            for op in BinOp::COMPARISON {
                let expr = Expr::binary(op, l.expr.clone(), r.expr.clone());
                let bits = bitset(
                    l.values
                        .iter()
                        .zip(&r.values)
                        .map(|(a, b)| op.compare(*a, *b)),
                    n,
                );
                out.push(Atom {
                    size: expr.size(),
                    expr,
                    bits,
                });
            }
        }
    }
    // Stable: generation order breaks ties within a size.
    out.sort_by_key(|a| a.size);
    out
}

/// Enumerate candidates matching the samples, in canonical order, until
/// `accept` returns true. Each candidate visited costs one budget unit.
pub fn search(
    spec: &SynthesisSpec,
    budget: &mut Budget,
    accept: &mut dyn FnMut(&Expr, &mut Budget) -> bool,
) -> SynthOutcome {
    if !spec.is_consistent() {
        return SynthOutcome::Unsat;
    }
    let n = spec.samples.len();
    let target = bitset(spec.samples.iter().map(|s| s.value), n);
    let all = bitset(std::iter::repeat_n(true, n), n);
    let none = vec![0u64; all.len()];

    let mut try_one = |expr: &Expr, bits: &[u64], budget: &mut Budget| -> Option<bool> {
        if !budget.take() {
            return None;
        }
        Some(bits == target.as_slice() && accept(expr, budget))
    };

    macro_rules! attempt {
        ($expr:expr, $bits:expr) => {
            match try_one(&$expr, &$bits, budget) {
                None => return SynthOutcome::Timeout,
                Some(true) => return SynthOutcome::Found($expr),
                Some(false) => {}
            }
        };
    }

    attempt!(Expr::boolean(true), all);
    attempt!(Expr::boolean(false), none);

    let atoms = atoms(spec);
    let Some(max_atom) = atoms.iter().map(|a| a.size).max() else {
        return SynthOutcome::Unsat;
    };
    let min_atom = atoms[0].size;
    for size in min_atom..=2 * max_atom + 1 {
        for a in atoms.iter().filter(|a| a.size == size) {
            attempt!(a.expr.clone(), a.bits);
        }
        for op in [BinOp::And, BinOp::Or] {
            for (i, a) in atoms.iter().enumerate() {
                if a.size + 1 + min_atom > size {
                    break;
                }
                for b in &atoms[i + 1..] {
                    if a.size + b.size + 1 != size {
                        continue;
                    }
                    let bits: Vec<u64> = a
                        .bits
                        .iter()
                        .zip(&b.bits)
                        .map(|(x, y)| if op == BinOp::And { x & y } else { x | y })
                        .collect();
                    attempt!(Expr::binary(op, a.expr.clone(), b.expr.clone()), bits);
                }
            }
        }
    }
    SynthOutcome::Unsat
}

/// Smallest expression consistent with every sample.
pub fn synthesize_condition(spec: &SynthesisSpec, budget: &mut Budget) -> SynthOutcome {
    search(spec, budget, &mut |_, _| true)
}
