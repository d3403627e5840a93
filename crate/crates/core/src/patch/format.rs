// SPDX-License-Identifier: Apache-2.0

//! Line-oriented patch text:
//!
//! ```text
//! patch engine=syn ordinal=1
//! wrap-precondition 2 fa * fb != 0
//! ```

use thiserror::Error;

use super::{Edit, Engine, Patch, PatchMeta};
use crate::lang::{parse_expr, parse_stmt, print_expr, print_stmt_inline, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("patch line {line}: {message}")]
pub struct PatchFormatError {
    pub line: usize,
    pub message: String,
}

impl Patch {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "patch engine={} ordinal={}\n",
            self.meta.engine, self.meta.ordinal
        );
        for e in &self.edits {
            let line = match e {
                Edit::ReplaceExpr(id, x) => format!("replace-expr {id} {}", print_expr(x)),
                Edit::ReplaceStmt(id, s) => format!("replace-stmt {id} {}", print_stmt_inline(s)),
                Edit::DeleteStmt(id) => format!("delete-stmt {id}"),
                Edit::InsertStmtBefore(id, s) => {
                    format!("insert-before {id} {}", print_stmt_inline(s))
                }
                Edit::WrapWithPrecondition(id, x) => {
                    format!("wrap-precondition {id} {}", print_expr(x))
                }
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, PatchFormatError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or(PatchFormatError {
            line: 1,
            message: "missing header".into(),
        })?;
        let err = |line: usize, message: String| PatchFormatError {
            line: line + 1,
            message,
        };
        let mut words = header.split_whitespace();
        if words.next() != Some("patch") {
            return Err(err(hl, "header must start with `patch`".into()));
        }
        let mut engine = None;
        let mut ordinal = None;
        for w in words {
            match w.split_once('=') {
                Some(("engine", v)) => {
                    engine = Some(match v {
                        "gv" => Engine::GenerateAndValidate,
                        "syn" => Engine::Synthesis,
                        "manual" => Engine::Manual,
                        other => return Err(err(hl, format!("unknown engine `{other}`"))),
                    })
                }
                Some(("ordinal", v)) => {
                    ordinal = Some(
                        v.parse()
                            .map_err(|_| err(hl, format!("invalid ordinal `{v}`")))?,
                    )
                }
                _ => return Err(err(hl, format!("unexpected header field `{w}`"))),
            }
        }
        let meta = PatchMeta {
            engine: engine.ok_or_else(|| err(hl, "missing engine".into()))?,
            ordinal: ordinal.ok_or_else(|| err(hl, "missing ordinal".into()))?,
            discovered_at: 0,
        };
        let mut edits = Vec::new();
        for (ln, line) in lines {
            let line = line.trim();
            let (op, rest) = line.split_once(' ').unwrap_or((line, ""));
            let (id, src) = rest.trim().split_once(' ').unwrap_or((rest.trim(), ""));
            let id = NodeId(
                id.parse()
                    .map_err(|_| err(ln, format!("invalid node id `{id}`")))?,
            );
            let src = src.trim();
            let expr = || parse_expr(src).map_err(|e| err(ln, e.to_string()));
            let stmt = || parse_stmt(src).map_err(|e| err(ln, e.to_string()));
            edits.push(match op {
                "replace-expr" => Edit::ReplaceExpr(id, expr()?),
                "replace-stmt" => Edit::ReplaceStmt(id, stmt()?),
                "delete-stmt" => Edit::DeleteStmt(id),
                "insert-before" => Edit::InsertStmtBefore(id, stmt()?),
                "wrap-precondition" => Edit::WrapWithPrecondition(id, expr()?),
                other => return Err(err(ln, format!("unknown edit `{other}`"))),
            });
        }
        Ok(Patch { edits, meta })
    }
}
