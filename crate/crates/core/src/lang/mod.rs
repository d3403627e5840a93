// SPDX-License-Identifier: Apache-2.0

//! The toy imperative language: syntax tree, parser, type checker,
//! canonical printer and a deterministic interpreter.

pub mod ast;
pub mod interp;
pub mod parser;
pub mod printer;
pub mod typeck;

use thiserror::Error;

pub use ast::*;
pub use interp::{
    evaluate, execute, execute_angelic, observe, ExecError, ExecOutcome, ExecResult, ForcedValues,
    Observation, RuntimeError, DEFAULT_STEP_LIMIT,
};
pub use parser::{parse, parse_expr, parse_stmt};
pub use printer::{print_expr, print_program, print_stmt_inline};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("type error at node {node}: {message}")]
    Type { node: NodeId, message: String },
    #[error("unresolved variable `{name}` at node {node}")]
    UnresolvedVariable { node: NodeId, name: String },
    #[error("duplicate function `{0}`")]
    DuplicateFunction(String),
    #[error("duplicate parameter `{param}` in `{function}`")]
    DuplicateParam { function: String, param: String },
    #[error("parameter `{param}` of `{function}` has an empty domain")]
    EmptyDomain { function: String, param: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADD: &str =
        "fn add(x in [-50,50], y in [-50,50]) { if (x == 10) { return x - y; } return x + y; }";

    #[test]
    fn parses_add_with_condition() {
        let p = parse(ADD).unwrap();
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.condition_nodes().len(), 1);
        let cond = p.condition_nodes()[0];
        let stmt = p.statement_of_condition(cond).unwrap();
        assert!(matches!(stmt.kind, StmtKind::If { .. }));
    }

    #[test]
    fn empty_source_is_empty_program() {
        assert_eq!(parse("").unwrap(), Program::default());
        assert_eq!(parse("  # only a comment\n").unwrap(), Program::default());
    }

    #[test]
    fn logical_op_on_integers_is_type_error() {
        let err = parse("fn f(x in [0,1]) { return x && 3; }").unwrap_err();
        assert!(matches!(err, LangError::Type { .. }), "{err:?}");
    }

    #[test]
    fn reports_syntax_error_location() {
        let err = parse("fn f(x in [0,1]) {\n  return x +;\n}").unwrap_err();
        match err {
            LangError::Syntax { line, col, .. } => assert_eq!((line, col), (2, 13)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_functions_and_unresolved_names() {
        let dup = "fn f(x in [0,1]) { return x; } fn f(y in [0,1]) { return y; }";
        assert_eq!(
            parse(dup).unwrap_err(),
            LangError::DuplicateFunction("f".into())
        );
        let unresolved = parse("fn f(x in [0,1]) { return z; }").unwrap_err();
        assert!(matches!(unresolved, LangError::UnresolvedVariable { .. }));
        let scoped = parse("fn f(x in [0,1]) { if (x > 0) { let t = 1; } return t; }").unwrap_err();
        assert!(matches!(scoped, LangError::UnresolvedVariable { .. }));
        let empty = parse("fn f(x in [3,1]) { return x; }").unwrap_err();
        assert!(matches!(empty, LangError::EmptyDomain { .. }));
    }

    #[test]
    fn node_ids_are_preorder() {
        let p = parse(ADD).unwrap();
        let mut ids = Vec::new();
        p.walk(&mut |n| ids.push(n.id().0));
        assert_eq!(ids, (0..ids.len() as u32).collect::<Vec<_>>());
    }

    #[test]
    fn pretty_print_round_trips_with_ids() {
        let p = parse(ADD).unwrap();
        let text = print_program(&p);
        assert_eq!(
            text,
            "fn add(x in [-50, 50], y in [-50, 50]) {\n    if (x == 10) {\n        return x - y;\n    }\n    return x + y;\n}\n"
        );
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn nested_if_prints_indented() {
        let src = "fn f(a in [0,3], b in [0,3]) { if (a > 0) { if (b > 0) { return 1; } else { return 2; } } while (false) { } return 0; }";
        let text = print_program(&parse(src).unwrap());
        assert_eq!(
            text,
            "fn f(a in [0, 3], b in [0, 3]) {\n    if (a > 0) {\n        if (b > 0) {\n            return 1;\n        } else {\n            return 2;\n        }\n    }\n    while (false) {\n    }\n    return 0;\n}\n"
        );
    }

    #[test]
    fn printer_keeps_needed_parentheses() {
        for src in [
            "(a - b) - c",
            "a - (b - c)",
            "-(5)",
            "-5 * a",
            "a - -5",
            "!(a < b && b < c)",
            "(a + b) * c",
            "!!(a == b) || a != b",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = print_expr(&e);
            assert_eq!(parse_expr(&printed).unwrap(), e, "{src} -> {printed}");
        }
        assert_eq!(print_expr(&parse_expr("(a - b) - c").unwrap()), "a - b - c");
        assert_eq!(
            print_expr(&parse_expr("a and not b or c").unwrap()),
            "a && !b || c"
        );
    }

    #[test]
    fn executes_add_examples() {
        let p = parse(ADD).unwrap();
        assert_eq!(
            evaluate(&p, "add", &[5, 5], DEFAULT_STEP_LIMIT).unwrap(),
            ExecResult::Returned(10)
        );
        assert_eq!(
            evaluate(&p, "add", &[10, 8], DEFAULT_STEP_LIMIT).unwrap(),
            ExecResult::Returned(2)
        );
    }

    #[test]
    fn infinite_loop_hits_step_limit() {
        let p = parse("fn spin(x in [0,1]) { while (true) { } return x; }").unwrap();
        let out = execute(&p, "spin", &[0], 1000).unwrap();
        assert_eq!(out.result, ExecResult::StepLimitExceeded);
    }

    #[test]
    fn runtime_errors_are_outcomes() {
        let p = parse("fn f(x in [0,3]) { if (x == 1) { return 1 % (x - 1); } return 10 / x; }")
            .unwrap();
        assert_eq!(
            evaluate(&p, "f", &[0], 100).unwrap(),
            ExecResult::RuntimeError(RuntimeError::DivisionByZero)
        );
        assert_eq!(
            evaluate(&p, "f", &[1], 100).unwrap(),
            ExecResult::RuntimeError(RuntimeError::ModuloByZero)
        );
        let fall = parse("fn g(x in [0,3]) { if (x > 0) { return 1; } }").unwrap();
        assert_eq!(
            evaluate(&fall, "g", &[0], 100).unwrap(),
            ExecResult::RuntimeError(RuntimeError::MissingReturn)
        );
    }

    #[test]
    fn call_errors() {
        let p = parse(ADD).unwrap();
        assert_eq!(
            evaluate(&p, "sub", &[1, 2], 100).unwrap_err(),
            ExecError::UnknownFunction("sub".into())
        );
        assert!(matches!(
            evaluate(&p, "add", &[1], 100).unwrap_err(),
            ExecError::ArityMismatch {
                expected: 2,
                got: 1,
                ..
            }
        ));
    }

    #[test]
    fn forcing_condition_false_takes_else_path() {
        let p = parse(ADD).unwrap();
        let cond = p.condition_nodes()[0];
        let forced = ForcedValues::from([(cond, vec![false])]);
        let out = execute_angelic(&p, "add", &[10, 8], &forced, DEFAULT_STEP_LIMIT).unwrap();
        // Oracle: the unforced interpreter on the same input with the guard removed.
        let reference = parse("fn add(x in [-50,50], y in [-50,50]) { return x + y; }").unwrap();
        assert_eq!(
            out.result,
            evaluate(&reference, "add", &[10, 8], 100).unwrap()
        );
        assert_eq!(out.result, ExecResult::Returned(18));
        assert_eq!(out.cond_log, vec![(cond, false)]);
    }

    #[test]
    fn empty_forcing_matches_plain_execution() {
        let p = parse(ADD).unwrap();
        for args in [[10, 8], [5, 5], [-3, 40]] {
            assert_eq!(
                execute_angelic(&p, "add", &args, &ForcedValues::new(), 100).unwrap(),
                execute(&p, "add", &args, 100).unwrap()
            );
        }
    }

    #[test]
    fn forced_false_bounds_loop() {
        let p =
            parse("fn count(n in [0,100]) { let i = 0; while (i < n) { i = i + 1; } return i; }")
                .unwrap();
        let cond = p.condition_nodes()[0];
        let forced = ForcedValues::from([(cond, vec![true, true, true, false])]);
        let out = execute_angelic(&p, "count", &[100], &forced, DEFAULT_STEP_LIMIT).unwrap();
        assert_eq!(out.result, ExecResult::Returned(3));
        // Exhausted sequence falls back to the real condition.
        let short = ForcedValues::from([(cond, vec![false])]);
        let out = execute_angelic(&p, "count", &[4], &short, DEFAULT_STEP_LIMIT).unwrap();
        assert_eq!(out.result, ExecResult::Returned(0));
    }

    #[test]
    fn coverage_and_cond_log() {
        let p = parse(ADD).unwrap();
        let out = execute(&p, "add", &[5, 5], 100).unwrap();
        let cond = p.condition_nodes()[0];
        assert!(out.coverage.contains(&cond));
        assert_eq!(out.cond_log, vec![(cond, false)]);
        let then_return = match &p.statement_of_condition(cond).unwrap().kind {
            StmtKind::If { then_block, .. } => then_block.stmts[0].id,
            _ => unreachable!(),
        };
        assert!(!out.coverage.contains(&then_return));
    }

    #[test]
    fn observe_captures_valuations() {
        let p = parse(
            "fn f(a in [0,9], b in [0,9]) { let s = a + b; if (s > 5) { return 1; } return 0; }",
        )
        .unwrap();
        let cond = p.condition_nodes()[0];
        let (res, obs) = observe(&p, "f", &[2, 7], &ForcedValues::new(), cond, 100).unwrap();
        assert_eq!(res, ExecResult::Returned(1));
        assert_eq!(
            obs,
            vec![Observation {
                env: vec![("a".into(), 2), ("b".into(), 7), ("s".into(), 9)],
                value: true
            }]
        );
        assert_eq!(p.scope_at(cond).unwrap(), vec!["a", "b", "s"]);
    }
}
