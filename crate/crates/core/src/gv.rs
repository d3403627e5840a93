// SPDX-License-Identifier: Apache-2.0

//! Generate-and-validate repair: enumerate single-edit (then two-edit)
//! mutations around suspicious nodes and keep every candidate that passes
//! the whole validation suite.

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::harness::{run_test, TestSuite};
use crate::lang::{
    print_expr, print_program, print_stmt_inline, BinOp, Expr, ExprKind, NodeId, NodeRef, OpClass,
    Program, Stmt, StmtKind, Ty, UnOp, DEFAULT_STEP_LIMIT,
};
use crate::patch::{apply_patch, localize, Edit, Engine, LocalizeError, Patch};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GvConfig {
    /// Maximum number of validated candidates.
    pub budget_evals: u64,
    pub wall_clock: Option<Duration>,
    pub seed: u64,
    pub max_patches: usize,
    pub step_limit: u64,
}

impl Default for GvConfig {
    fn default() -> Self {
        Self {
            budget_evals: 2_000,
            wall_clock: None,
            seed: 0,
            max_patches: usize::MAX,
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GvError {
    #[error("the suite has no failing test")]
    NoFailingTests,
}

impl From<LocalizeError> for GvError {
    fn from(e: LocalizeError) -> Self {
        match e {
            LocalizeError::NoFailingTests => GvError::NoFailingTests,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GvRun {
    /// Adequate patches in discovery order.
    pub patches: Vec<Patch>,
    pub evals: u64,
    /// True when every candidate was validated before any limit hit.
    pub exhausted: bool,
}

struct Search<'a> {
    program: &'a Program,
    suite: &'a TestSuite,
    cfg: &'a GvConfig,
    started: Instant,
    seen: HashSet<String>,
    patches: Vec<Patch>,
    evals: u64,
    stopped: bool,
}

impl Search<'_> {
    fn out_of_budget(&self) -> bool {
        self.evals >= self.cfg.budget_evals
            || self.patches.len() >= self.cfg.max_patches
            || self
                .cfg
                .wall_clock
                .is_some_and(|w| self.started.elapsed() >= w)
    }

    /// Validate `candidates` in order; returns the outcome of each one that
    /// was consumed (applied, new, and within budget).
    fn run(&mut self, candidates: Vec<Vec<Edit>>) -> Vec<(Vec<Edit>, BTreeSet<usize>)> {
        let original = print_program(self.program);
        let mut fresh = Vec::new();
        for edits in candidates {
            let patch = Patch::new(edits, Engine::GenerateAndValidate, 0);
            let Ok(patched) = apply_patch(self.program, &patch) else {
                continue;
            };
            let text = print_program(&patched);
            if text == original || !self.seen.insert(text) {
                continue;
            }
            fresh.push((patch.edits, patched));
        }
        let mut consumed = Vec::new();
        for chunk in fresh.chunks(32) {
            if self.stopped {
                break;
            }
            let outcomes: Vec<BTreeSet<usize>> = chunk
                .par_iter()
                .map(|(_, patched)| self.failing(patched))
                .collect();
            for ((edits, _), failing) in chunk.iter().zip(outcomes) {
                if self.out_of_budget() {
                    self.stopped = true;
                    break;
                }
                self.evals += 1;
                if failing.is_empty() {
                    let mut p = Patch::new(
                        edits.clone(),
                        Engine::GenerateAndValidate,
                        self.patches.len() + 1,
                    );
                    p.meta.discovered_at = self.evals;
                    self.patches.push(p);
                }
                consumed.push((edits.clone(), failing));
            }
        }
        consumed
    }

    fn failing(&self, patched: &Program) -> BTreeSet<usize> {
        self.suite
            .iter()
            .enumerate()
            .filter(|(_, t)| !run_test(patched, t, self.cfg.step_limit).is_pass())
            .map(|(i, _)| i)
            .collect()
    }
}

/// List test-suite adequate patches in discovery order.
pub fn enumerate_adequate_patches(
    program: &Program,
    suite: &TestSuite,
    cfg: &GvConfig,
) -> Result<GvRun, GvError> {
    let ranking = localize(program, suite, cfg.step_limit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Sites in descending suspiciousness; equal scores shuffled.
    let mut sites: Vec<NodeId> = Vec::new();
    let positive: Vec<(NodeId, f64)> = ranking
        .entries
        .iter()
        .copied()
        .filter(|(_, s)| *s > 0.0)
        .collect();
    let mut i = 0;
    while i < positive.len() {
        let mut j = i;
        while j < positive.len() && positive[j].1 == positive[i].1 {
            j += 1;
        }
        let mut group: Vec<NodeId> = positive[i..j].iter().map(|(n, _)| *n).collect();
        group.shuffle(&mut rng);
        sites.extend(group);
        i = j;
    }

    let pool = SnippetPool::new(program);
    let mut singles = Vec::new();
    for &site in &sites {
        for edit in site_candidates(program, &pool, site, &mut rng) {
            singles.push(vec![edit]);
        }
    }

    let mut search = Search {
        program,
        suite,
        cfg,
        started: Instant::now(),
        seen: HashSet::new(),
        patches: Vec::new(),
        evals: 0,
        stopped: false,
    };
    let base_failing = search.failing(program);
    let consumed = search.run(singles.clone());

    // Two-edit compositions: a partial fix combined with another single
    // edit at a different node.
    if !search.stopped {
        let partial: Vec<&Vec<Edit>> = consumed
            .iter()
            .filter(|(_, f)| {
                !f.is_empty() && f.len() < base_failing.len() && f.is_subset(&base_failing)
            })
            .map(|(e, _)| e)
            .collect();
        let mut pairs = Vec::new();
        for first in partial {
            for second in &singles {
                if second[0].target() != first[0].target() {
                    pairs.push(vec![first[0].clone(), second[0].clone()]);
                }
            }
        }
        search.run(pairs);
    }

    Ok(GvRun {
        exhausted: !search.stopped,
        patches: search.patches,
        evals: search.evals,
    })
}

/// Expressions and statements available for copying, same function first.
struct SnippetPool {
    /// (function index, expression) in pre-order.
    exprs: Vec<(usize, Expr)>,
    stmts: Vec<(usize, Stmt)>,
    /// Comparisons used as precondition guards.
    predicates: Vec<Expr>,
}

impl SnippetPool {
    fn new(program: &Program) -> Self {
        let mut exprs = Vec::new();
        let mut stmts = Vec::new();
        let mut predicates: Vec<Expr> = Vec::new();
        for (fi, f) in program.functions.iter().enumerate() {
            f.body.walk(&mut |n| match n {
                NodeRef::Expr(e) => {
                    exprs.push((fi, e.clone()));
                    if let ExprKind::Binary(op, ..) = &e.kind {
                        if op.class() == OpClass::Comparison {
                            predicates.push(e.clone());
                        }
                    }
                }
                NodeRef::Stmt(s) => stmts.push((fi, s.clone())),
                NodeRef::Block(_) => {}
            });
        }
        let negated: Vec<Expr> = predicates.iter().map(negate).collect();
        predicates.extend(negated);
        Self {
            exprs,
            stmts,
            predicates,
        }
    }

    fn exprs_for(&self, fi: usize) -> impl Iterator<Item = &Expr> {
        let same = self.exprs.iter().filter(move |(f, _)| *f == fi);
        let other = self.exprs.iter().filter(move |(f, _)| *f != fi);
        same.chain(other).map(|(_, e)| e)
    }

    fn stmts_for(&self, fi: usize) -> impl Iterator<Item = &Stmt> {
        let same = self.stmts.iter().filter(move |(f, _)| *f == fi);
        let other = self.stmts.iter().filter(move |(f, _)| *f != fi);
        same.chain(other).map(|(_, s)| s)
    }
}

fn negate(e: &Expr) -> Expr {
    match &e.kind {
        ExprKind::Unary(UnOp::Not, inner) => (**inner).clone(),
        _ => Expr::unary(UnOp::Not, e.clone()),
    }
}

fn free_vars(e: &Expr) -> Vec<String> {
    let mut out = Vec::new();
    e.walk(&mut |n| {
        if let NodeRef::Expr(Expr {
            kind: ExprKind::Var(v),
            ..
        }) = n
        {
            out.push(v.clone());
        }
    });
    out
}

/// Candidate edits for one site: each operator's list is shuffled, then the
/// lists are interleaved round-robin.
fn site_candidates(
    program: &Program,
    pool: &SnippetPool,
    site: NodeId,
    rng: &mut ChaCha8Rng,
) -> Vec<Edit> {
    let (Some(node), Some(fi), Some(scope)) = (
        program.node(site),
        program.function_of(site),
        program.scope_at(site),
    ) else {
        return Vec::new();
    };
    let in_scope = |e: &Expr| free_vars(e).iter().all(|v| scope.contains(v));
    let mut ops: Vec<Vec<Edit>> = Vec::new();
    match node {
        NodeRef::Expr(e) => {
            let mut flips = Vec::new();
            if let ExprKind::Binary(op, l, r) = &e.kind {
                let class: &[BinOp] = match op.class() {
                    OpClass::Arithmetic => &BinOp::ARITHMETIC,
                    OpClass::Comparison => &BinOp::COMPARISON,
                    OpClass::Logical => &BinOp::LOGICAL,
                };
                for alt in class.iter().filter(|o| *o != op) {
                    flips.push(Edit::ReplaceExpr(
                        site,
                        Expr::binary(*alt, (**l).clone(), (**r).clone()),
                    ));
                }
            }
            if e.ty() == Ty::Bool {
                flips.push(Edit::ReplaceExpr(site, negate(e)));
            }
            let own = print_expr(e);
            let mut texts = HashSet::new();
            let mut replace = Vec::new();
            for s in pool.exprs_for(fi) {
                if s.ty() == e.ty() && in_scope(s) {
                    let t = print_expr(s);
                    if t != own && texts.insert(t) {
                        replace.push(Edit::ReplaceExpr(site, s.clone()));
                    }
                }
            }
            ops.push(flips);
            ops.push(replace);
        }
        NodeRef::Stmt(s) => {
            ops.push(vec![Edit::DeleteStmt(site)]);
            let own = print_stmt_inline(s);
            let mut texts = HashSet::new();
            let mut inserts = Vec::new();
            for c in pool.stmts_for(fi) {
                let t = print_stmt_inline(c);
                if t != own && texts.insert(t) {
                    inserts.push(Edit::InsertStmtBefore(site, c.clone()));
                }
            }
            ops.push(inserts);
            if !matches!(s.kind, StmtKind::Let { .. }) {
                let mut texts = HashSet::new();
                let wraps = pool
                    .predicates
                    .iter()
                    .filter(|p| in_scope(p) && texts.insert(print_expr(p)))
                    .map(|p| Edit::WrapWithPrecondition(site, p.clone()))
                    .collect();
                ops.push(wraps);
            }
        }
        NodeRef::Block(_) => {}
    }
    for list in &mut ops {
        list.shuffle(rng);
    }
    let longest = ops.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::new();
    for k in 0..longest {
        for list in &ops {
            if let Some(e) = list.get(k) {
                out.push(e.clone());
            }
        }
    }
    out
}
