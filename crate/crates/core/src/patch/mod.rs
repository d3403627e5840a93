// SPDX-License-Identifier: Apache-2.0

//! Patches as ordered lists of AST edits, plus fault localization.

mod format;
mod localize;

use std::fmt;

use thiserror::Error;

pub use format::PatchFormatError;
pub use localize::{localize, LocalizeError, SuspiciousnessRanking};

use crate::lang::parser::{renumber_block, renumber_expr, renumber_stmt};
use crate::lang::{typeck, Block, Expr, LangError, NodeId, NodeRef, Program, Stmt, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edit {
    ReplaceExpr(NodeId, Expr),
    ReplaceStmt(NodeId, Stmt),
    DeleteStmt(NodeId),
    InsertStmtBefore(NodeId, Stmt),
    WrapWithPrecondition(NodeId, Expr),
}

impl Edit {
    pub fn target(&self) -> NodeId {
        match self {
            Edit::ReplaceExpr(id, _)
            | Edit::ReplaceStmt(id, _)
            | Edit::DeleteStmt(id)
            | Edit::InsertStmtBefore(id, _)
            | Edit::WrapWithPrecondition(id, _) => *id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    GenerateAndValidate,
    Synthesis,
    Manual,
}

impl Engine {
    pub fn tag(self) -> &'static str {
        match self {
            Engine::GenerateAndValidate => "gv",
            Engine::Synthesis => "syn",
            Engine::Manual => "manual",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchMeta {
    pub engine: Engine,
    /// 1-based discovery order within one engine run.
    pub ordinal: usize,
    /// Engine cost (evaluation units) spent when the patch was found.
    pub discovered_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub edits: Vec<Edit>,
    pub meta: PatchMeta,
}

impl Patch {
    pub fn new(edits: Vec<Edit>, engine: Engine, ordinal: usize) -> Self {
        Self {
            edits,
            meta: PatchMeta {
                engine,
                ordinal,
                discovered_at: 0,
            },
        }
    }

    /// Structural identity: the edit lines of the serialized form.
    pub fn edits_text(&self) -> String {
        self.to_text()
            .split_once('\n')
            .map(|(_, rest)| rest.to_string())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatchError {
    #[error("patch has no edits")]
    Empty,
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("patched program is invalid: {0}")]
    Invalid(#[from] LangError),
    #[error("illegal edit: {0}")]
    IllegalEdit(String),
}

/// Apply `patch` to a copy of `program`. Unedited nodes keep their ids;
/// inserted subtrees are numbered after the program's current maximum id.
pub fn apply_patch(program: &Program, patch: &Patch) -> Result<Program, PatchError> {
    if patch.edits.is_empty() {
        return Err(PatchError::Empty);
    }
    let mut out = program.clone();
    let mut next = program.max_node_id().map(|id| id.0 + 1).unwrap_or(0);
    for edit in &patch.edits {
        apply_edit(&mut out, edit, &mut next)?;
    }
    for f in &out.functions {
        typeck::check_function(f)?;
        let mut has_return = false;
        f.body.walk(&mut |n| {
            if let NodeRef::Stmt(Stmt {
                kind: StmtKind::Return(_),
                ..
            }) = n
            {
                has_return = true;
            }
        });
        if !has_return {
            return Err(PatchError::IllegalEdit(format!(
                "function `{}` has no return left",
                f.name
            )));
        }
    }
    Ok(out)
}

fn apply_edit(program: &mut Program, edit: &Edit, next: &mut u32) -> Result<(), PatchError> {
    let target = edit.target();
    let kind = match program.node(target) {
        None => return Err(PatchError::UnknownNode(target)),
        Some(NodeRef::Expr(_)) => "expression",
        Some(NodeRef::Stmt(_)) => "statement",
        Some(NodeRef::Block(_)) => "block",
    };
    let want = match edit {
        Edit::ReplaceExpr(..) => "expression",
        _ => "statement",
    };
    if kind != want {
        return Err(PatchError::IllegalEdit(format!(
            "node {target} is a {kind}, not a {want}"
        )));
    }
    match edit {
        Edit::ReplaceExpr(id, e) => {
            let mut e = e.clone();
            renumber_expr(&mut e, next);
            let slot = program
                .functions
                .iter_mut()
                .find_map(|f| find_expr_in_block(&mut f.body, *id))
                .ok_or(PatchError::UnknownNode(*id))?;
            *slot = e;
        }
        Edit::ReplaceStmt(id, s) => {
            let mut s = s.clone();
            renumber_stmt(&mut s, next);
            with_stmt_slot(program, *id, |stmts, i| stmts[i] = s)?;
        }
        Edit::DeleteStmt(id) => {
            with_stmt_slot(program, *id, |stmts, i| {
                stmts.remove(i);
            })?;
        }
        Edit::InsertStmtBefore(id, s) => {
            let mut s = s.clone();
            renumber_stmt(&mut s, next);
            with_stmt_slot(program, *id, |stmts, i| stmts.insert(i, s))?;
        }
        Edit::WrapWithPrecondition(id, guard) => {
            let if_id = NodeId(*next);
            *next += 1;
            let mut guard = guard.clone();
            renumber_expr(&mut guard, next);
            let mut then_block = Block::new(Vec::new());
            renumber_block(&mut then_block, next);
            with_stmt_slot(program, *id, |stmts, i| {
                let inner =
                    std::mem::replace(&mut stmts[i], Stmt::new(StmtKind::Return(Expr::int(0))));
                then_block.stmts.push(inner);
                stmts[i] = Stmt {
                    id: if_id,
                    kind: StmtKind::If {
                        cond: guard,
                        then_block,
                        else_block: None,
                    },
                };
            })?;
        }
    }
    Ok(())
}

fn with_stmt_slot(
    program: &mut Program,
    id: NodeId,
    f: impl FnOnce(&mut Vec<Stmt>, usize),
) -> Result<(), PatchError> {
    let mut f = Some(f);
    for func in &mut program.functions {
        if stmt_slot(&mut func.body, id, &mut f) {
            return Ok(());
        }
    }
    Err(PatchError::UnknownNode(id))
}

fn stmt_slot<F: FnOnce(&mut Vec<Stmt>, usize)>(
    block: &mut Block,
    id: NodeId,
    f: &mut Option<F>,
) -> bool {
    if let Some(i) = block.stmts.iter().position(|s| s.id == id) {
        if let Some(f) = f.take() {
            f(&mut block.stmts, i);
        }
        return true;
    }
    for s in &mut block.stmts {
        let found = match &mut s.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                stmt_slot(then_block, id, f)
                    || else_block.as_mut().is_some_and(|b| stmt_slot(b, id, f))
            }
            StmtKind::While { body, .. } => stmt_slot(body, id, f),
            _ => false,
        };
        if found {
            return true;
        }
    }
    false
}

fn find_expr_in_block(block: &mut Block, id: NodeId) -> Option<&mut Expr> {
    for s in &mut block.stmts {
        let hit = match &mut s.kind {
            StmtKind::Let { value, .. }
            | StmtKind::Assign { value, .. }
            | StmtKind::Return(value) => find_expr(value, id),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => find_expr(cond, id)
                .or_else(|| find_expr_in_block(then_block, id))
                .or_else(|| else_block.as_mut().and_then(|b| find_expr_in_block(b, id))),
            StmtKind::While { cond, body } => {
                find_expr(cond, id).or_else(|| find_expr_in_block(body, id))
            }
        };
        if hit.is_some() {
            return hit;
        }
    }
    None
}

fn find_expr(e: &mut Expr, id: NodeId) -> Option<&mut Expr> {
    if e.id == id {
        return Some(e);
    }
    match &mut e.kind {
        crate::lang::ExprKind::Unary(_, x) => find_expr(x, id),
        crate::lang::ExprKind::Binary(_, l, r) => {
            if let Some(hit) = find_expr(l, id) {
                Some(hit)
            } else {
                find_expr(r, id)
            }
        }
        _ => None,
    }
}

/// Functions touched by `patch`, smallest body first (ties by source order).
pub fn involved_targets(patch: &Patch, program: &Program) -> Result<Vec<String>, PatchError> {
    let mut idx = Vec::new();
    for e in &patch.edits {
        let fi = program
            .function_of(e.target())
            .ok_or(PatchError::UnknownNode(e.target()))?;
        if !idx.contains(&fi) {
            idx.push(fi);
        }
    }
    let mut keyed: Vec<(usize, usize)> = idx
        .into_iter()
        .map(|i| (program.functions[i].size(), i))
        .collect();
    keyed.sort();
    Ok(keyed
        .into_iter()
        .map(|(_, i)| program.functions[i].name.clone())
        .collect())
}
