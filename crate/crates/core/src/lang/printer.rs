// SPDX-License-Identifier: Apache-2.0

//! Canonical pretty-printer. Output re-parses to the same tree and ids.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, f) in p.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function(f, &mut out);
    }
    out
}

fn print_function(f: &FunctionDef, out: &mut String) {
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| format!("{} in [{}, {}]", p.name, p.domain.lo, p.domain.hi))
        .collect();
    let _ = writeln!(out, "fn {}({}) {{", f.name, params.join(", "));
    for s in &f.body.stmts {
        print_stmt(s, 1, out);
    }
    out.push_str("}\n");
}

fn print_stmt(s: &Stmt, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    match &s.kind {
        StmtKind::Let { name, value } => {
            let _ = writeln!(out, "{pad}let {name} = {};", print_expr(value));
        }
        StmtKind::Assign { name, value } => {
            let _ = writeln!(out, "{pad}{name} = {};", print_expr(value));
        }
        StmtKind::Return(value) => {
            let _ = writeln!(out, "{pad}return {};", print_expr(value));
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = writeln!(out, "{pad}if ({}) {{", print_expr(cond));
            for s in &then_block.stmts {
                print_stmt(s, depth + 1, out);
            }
            if let Some(b) = else_block {
                let _ = writeln!(out, "{pad}}} else {{");
                for s in &b.stmts {
                    print_stmt(s, depth + 1, out);
                }
            }
            let _ = writeln!(out, "{pad}}}");
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "{pad}while ({}) {{", print_expr(cond));
            for s in &body.stmts {
                print_stmt(s, depth + 1, out);
            }
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

/// Single-line rendering of a statement, used by the patch format.
pub fn print_stmt_inline(s: &Stmt) -> String {
    fn block(b: &Block) -> String {
        if b.stmts.is_empty() {
            "{ }".to_string()
        } else {
            let inner: Vec<String> = b.stmts.iter().map(print_stmt_inline).collect();
            format!("{{ {} }}", inner.join(" "))
        }
    }
    match &s.kind {
        StmtKind::Let { name, value } => format!("let {name} = {};", print_expr(value)),
        StmtKind::Assign { name, value } => format!("{name} = {};", print_expr(value)),
        StmtKind::Return(value) => format!("return {};", print_expr(value)),
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let mut s = format!("if ({}) {}", print_expr(cond), block(then_block));
            if let Some(b) = else_block {
                s.push_str(" else ");
                s.push_str(&block(b));
            }
            s
        }
        StmtKind::While { cond, body } => format!("while ({}) {}", print_expr(cond), block(body)),
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, 0, &mut out);
    out
}

const UNARY_PREC: u8 = 6;

fn write_expr(e: &Expr, min_prec: u8, out: &mut String) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Unary(op, x) => {
            let paren = min_prec > UNARY_PREC;
            if paren {
                out.push('(');
            }
            match op {
                UnOp::Not => out.push('!'),
                UnOp::Neg => out.push('-'),
            }
            // `-5` would re-parse as a literal, so negated literals keep parens.
            if *op == UnOp::Neg && matches!(x.kind, ExprKind::Int(_)) {
                out.push('(');
                write_expr(x, 0, out);
                out.push(')');
            } else {
                write_expr(x, UNARY_PREC, out);
            }
            if paren {
                out.push(')');
            }
        }
        ExprKind::Binary(op, l, r) => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            let left_min = if op.class() == OpClass::Comparison {
                prec + 1
            } else {
                prec
            };
            write_expr(l, left_min, out);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(r, prec + 1, out);
            if paren {
                out.push(')');
            }
        }
    }
}
