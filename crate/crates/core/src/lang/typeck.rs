// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use super::ast::*;
use super::LangError;

/// Check function-level invariants, scoping and expression types.
pub fn check_program(program: &Program) -> Result<(), LangError> {
    let mut names = HashSet::new();
    for f in &program.functions {
        if !names.insert(f.name.as_str()) {
            return Err(LangError::DuplicateFunction(f.name.clone()));
        }
        check_function(f)?;
    }
    Ok(())
}

pub fn check_function(f: &FunctionDef) -> Result<(), LangError> {
    let mut seen = HashSet::new();
    for p in &f.params {
        if p.domain.is_empty() {
            return Err(LangError::EmptyDomain {
                function: f.name.clone(),
                param: p.name.clone(),
            });
        }
        if !seen.insert(p.name.as_str()) {
            return Err(LangError::DuplicateParam {
                function: f.name.clone(),
                param: p.name.clone(),
            });
        }
    }
    let mut scope: Vec<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
    check_block(&f.body, &mut scope)
}

fn check_block<'a>(b: &'a Block, scope: &mut Vec<&'a str>) -> Result<(), LangError> {
    let mark = scope.len();
    for s in &b.stmts {
        check_stmt(s, scope)?;
    }
    scope.truncate(mark);
    Ok(())
}

fn check_stmt<'a>(s: &'a Stmt, scope: &mut Vec<&'a str>) -> Result<(), LangError> {
    match &s.kind {
        StmtKind::Let { name, value } => {
            expect(value, Ty::Int, scope)?;
            scope.push(name);
        }
        StmtKind::Assign { name, value } => {
            if !scope.contains(&name.as_str()) {
                return Err(LangError::UnresolvedVariable {
                    node: s.id,
                    name: name.clone(),
                });
            }
            expect(value, Ty::Int, scope)?;
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            expect(cond, Ty::Bool, scope)?;
            check_block(then_block, scope)?;
            if let Some(b) = else_block {
                check_block(b, scope)?;
            }
        }
        StmtKind::While { cond, body } => {
            expect(cond, Ty::Bool, scope)?;
            check_block(body, scope)?;
        }
        StmtKind::Return(value) => expect(value, Ty::Int, scope)?,
    }
    Ok(())
}

fn expect(e: &Expr, want: Ty, scope: &[&str]) -> Result<(), LangError> {
    let got = infer(e, scope)?;
    if got == want {
        Ok(())
    } else {
        Err(LangError::Type {
            node: e.id,
            message: format!("expected {want}, found {got}"),
        })
    }
}

/// Infer the type of `e`, checking operands against their operator.
pub fn infer(e: &Expr, scope: &[&str]) -> Result<Ty, LangError> {
    match &e.kind {
        ExprKind::Int(_) => Ok(Ty::Int),
        ExprKind::Bool(_) => Ok(Ty::Bool),
        ExprKind::Var(name) => {
            if scope.contains(&name.as_str()) {
                Ok(Ty::Int)
            } else {
                Err(LangError::UnresolvedVariable {
                    node: e.id,
                    name: name.clone(),
                })
            }
        }
        ExprKind::Unary(op, x) => {
            let (arg, res) = match op {
                UnOp::Not => (Ty::Bool, Ty::Bool),
                UnOp::Neg => (Ty::Int, Ty::Int),
            };
            operand(e, x, arg, scope)?;
            Ok(res)
        }
        ExprKind::Binary(op, l, r) => {
            let (arg, res) = match op.class() {
                OpClass::Arithmetic => (Ty::Int, Ty::Int),
                OpClass::Comparison => (Ty::Int, Ty::Bool),
                OpClass::Logical => (Ty::Bool, Ty::Bool),
            };
            operand(e, l, arg, scope)?;
            operand(e, r, arg, scope)?;
            Ok(res)
        }
    }
}

fn operand(parent: &Expr, x: &Expr, want: Ty, scope: &[&str]) -> Result<(), LangError> {
    let got = infer(x, scope)?;
    if got == want {
        Ok(())
    } else {
        Err(LangError::Type {
            node: parent.id,
            message: format!("operand of type {got} where {want} is required"),
        })
    }
}
