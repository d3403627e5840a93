// SPDX-License-Identifier: Apache-2.0

use super::*;
use crate::harness::{count_failing, TestCase};
use crate::lang::{evaluate, parse, print_expr, BinOp, Expr, ExprKind};
use crate::patch::Edit;

const ADD: &str =
    "fn add(x in [-50,50], y in [-50,50]) { if (x == 10) { return x - y; } return x + y; }";
const BRACKET: &str =
    "fn bracket(fa in [-10,10], fb in [-10,10]) { if (fa * fb >= 0) { return -1; } return 1; }";
const BRACKET_FIXED: &str =
    "fn bracket(fa in [-10,10], fb in [-10,10]) { if (fa * fb > 0) { return -1; } return 1; }";

fn add_suite() -> TestSuite {
    TestSuite::new(vec![
        TestCase::manual("fails", "add", &[10, 8], 18),
        TestCase::manual("passes", "add", &[5, 5], 10),
    ])
}

fn bracket_suite() -> TestSuite {
    TestSuite::new(vec![
        TestCase::manual("zero_fa", "bracket", &[0, 7], 1),
        TestCase::manual("zero_fb", "bracket", &[5, 0], 1),
        TestCase::manual("neg_a", "bracket", &[-3, 2], 1),
        TestCase::manual("neg_b", "bracket", &[4, -5], 1),
    ])
}

fn sample(env: &[(&str, i64)], value: bool) -> Sample {
    Sample {
        env: env.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
        value,
    }
}

/// Reference evaluation of a synthesized predicate on one sample.
fn eval_pred(e: &Expr, s: &Sample) -> i64 {
    match &e.kind {
        ExprKind::Int(v) => *v,
        ExprKind::Bool(b) => *b as i64,
        ExprKind::Var(v) => s.get(v).unwrap(),
        ExprKind::Unary(_, x) => (eval_pred(x, s) == 0) as i64,
        ExprKind::Binary(op, l, r) => {
            let (a, b) = (eval_pred(l, s), eval_pred(r, s));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::And => (a != 0 && b != 0) as i64,
                BinOp::Or => (a != 0 || b != 0) as i64,
                cmp => cmp.compare(a, b) as i64,
            }
        }
    }
}

#[test]
fn add_condition_forced_false() {
    let p = parse(ADD).unwrap();
    let records = mine_angelic_values(&p, &add_suite(), 100);
    let cond = p.condition_nodes()[0];
    let rec = records
        .iter()
        .find(|r| r.site.kind == SiteKind::Condition && r.site.node == cond)
        .expect("condition is a repair site");
    let (_, c) = rec
        .per_test
        .iter()
        .find(|(t, _)| t.name == "fails")
        .unwrap();
    assert_eq!(c, &Constraint::Forced(vec![false]));
    let forced = crate::lang::ForcedValues::from([(cond, vec![false])]);
    let out = crate::lang::execute_angelic(&p, "add", &[10, 8], &forced, 100).unwrap();
    assert_eq!(out.result.value(), Some(18));
    // The passing test never reaches a forced value it did not observe.
    let (_, c) = rec
        .per_test
        .iter()
        .find(|(t, _)| t.name == "passes")
        .unwrap();
    assert_eq!(c, &Constraint::Unconstrained(vec![false]));
}

#[test]
fn unaffected_failure_has_no_angelic_fix() {
    let p = parse("fn inc(x in [0,5]) { return x + 1; }").unwrap();
    let suite = TestSuite::new(vec![TestCase::manual("t", "inc", &[1], 1)]);
    assert!(mine_angelic_values(&p, &suite, 100).is_empty());
    let run = repair_syn(&p, &suite, &SynConfig::default()).unwrap();
    assert_eq!(run.result, SynResult::NoPatch(NoPatchReason::NoAngelicFix));
}

#[test]
fn bracket_guard_forced_false_passes() {
    let p = parse(BRACKET).unwrap();
    let cond = p.condition_nodes()[0];
    for args in [[0, 7], [5, 0]] {
        let forced = crate::lang::ForcedValues::from([(cond, vec![false])]);
        let out = crate::lang::execute_angelic(&p, "bracket", &args, &forced, 100).unwrap();
        assert_eq!(out.result.value(), Some(1));
    }
    let records = mine_angelic_values(&p, &bracket_suite(), 100);
    assert!(records.iter().any(|r| r.site.node == cond));
}

#[test]
fn synthesizes_smallest_matching_comparison() {
    let samples = vec![
        sample(&[("fa", 2), ("fb", -3)], true),
        sample(&[("fa", 2), ("fb", 3)], false),
        sample(&[("fa", -2), ("fb", -3)], false),
        sample(&[("fa", 0), ("fb", 5)], false),
        sample(&[("fa", 0), ("fb", -5)], false),
    ];
    let spec = SynthesisSpec::with_constants(samples.clone(), vec!["fa".into(), "fb".into()], &[0]);
    let SynthOutcome::Found(e) = synthesize_condition(&spec, &mut Budget::new(100_000)) else {
        panic!("expected a predicate");
    };
    assert_eq!(print_expr(&e), "fa * fb < 0");
    // Brute force: no matching comparison over the vocabulary is smaller.
    let terms = [
        Expr::var("fa"),
        Expr::var("fb"),
        Expr::binary(BinOp::Mul, Expr::var("fa"), Expr::var("fb")),
        Expr::binary(BinOp::Sub, Expr::var("fa"), Expr::var("fb")),
        Expr::int(0),
        Expr::int(1),
        Expr::int(-1),
    ];
    let mut smallest = usize::MAX;
    for l in &terms {
        for r in &terms {
            for op in BinOp::COMPARISON {
                let cand = Expr::binary(op, l.clone(), r.clone());
                if samples
                    .iter()
                    .all(|s| (eval_pred(&cand, s) != 0) == s.value)
                {
                    smallest = smallest.min(cand.size());
                }
            }
        }
    }
    assert_eq!(e.size(), smallest);
    assert!(samples.iter().all(|s| (eval_pred(&e, s) != 0) == s.value));
}

#[test]
fn contradictory_samples_are_unsat() {
    let spec = SynthesisSpec::with_constants(
        vec![sample(&[("x", 1)], true), sample(&[("x", 1)], false)],
        vec!["x".into()],
        &[],
    );
    assert_eq!(
        synthesize_condition(&spec, &mut Budget::new(1_000)),
        SynthOutcome::Unsat
    );
}

#[test]
fn empty_samples_give_true() {
    let spec = SynthesisSpec::with_constants(vec![], vec!["x".into()], &[]);
    assert_eq!(
        synthesize_condition(&spec, &mut Budget::new(10)),
        SynthOutcome::Found(Expr::boolean(true))
    );
}

#[test]
fn exhaustion_is_unsat_and_short_budget_times_out() {
    // Odd x is not expressible without `%`.
    let samples = vec![
        sample(&[("x", 1)], true),
        sample(&[("x", 2)], false),
        sample(&[("x", 3)], true),
        sample(&[("x", 4)], false),
        sample(&[("x", 5)], true),
    ];
    let spec = SynthesisSpec::with_constants(samples, vec!["x".into()], &[]);
    assert_eq!(
        synthesize_condition(&spec, &mut Budget::new(1_000_000)),
        SynthOutcome::Unsat
    );
    assert_eq!(
        synthesize_condition(&spec, &mut Budget::new(5)),
        SynthOutcome::Timeout
    );
}

#[test]
fn constants_in_canonical_order() {
    let spec = SynthesisSpec::with_constants(vec![], vec![], &[10, -3, 0, 3, -10]);
    assert_eq!(spec.constants, vec![0, 1, -1, 3, -3, 10, -10]);
}

#[test]
fn add_repair_is_adequate() {
    let p = parse(ADD).unwrap();
    let run = repair_syn(&p, &add_suite(), &SynConfig::default()).unwrap();
    let patch = run.result.patch().expect("patched");
    assert_eq!(patch.edits.len(), 1);
    assert_eq!(
        count_failing(&apply_patch(&p, patch).unwrap(), &add_suite(), 100),
        0
    );
    assert!(run.cost > 0);
}

fn equivalent_on_domain(a: &Program, b: &Program, f: &str) -> bool {
    (-10..=10)
        .all(|x| (-10..=10).all(|y| evaluate(a, f, &[x, y], 100) == evaluate(b, f, &[x, y], 100)))
}

#[test]
fn bracket_manual_suite_overfits() {
    let p = parse(BRACKET).unwrap();
    let run = repair_syn(&p, &bracket_suite(), &SynConfig::default()).unwrap();
    let patch = run.result.patch().expect("patched");
    assert!(matches!(patch.edits[0], Edit::WrapWithPrecondition(..)));
    let patched = apply_patch(&p, patch).unwrap();
    assert_eq!(count_failing(&patched, &bracket_suite(), 100), 0);
    assert!(!equivalent_on_domain(
        &patched,
        &parse(BRACKET_FIXED).unwrap(),
        "bracket"
    ));
}

#[test]
fn bracket_with_positive_product_test_is_correct() {
    let p = parse(BRACKET).unwrap();
    let mut suite = bracket_suite();
    suite
        .tests
        .push(TestCase::manual("pos", "bracket", &[2, 3], -1));
    let run = repair_syn(&p, &suite, &SynConfig::default()).unwrap();
    let patch = run.result.patch().expect("patched");
    let patched = apply_patch(&p, patch).unwrap();
    assert!(equivalent_on_domain(
        &patched,
        &parse(BRACKET_FIXED).unwrap(),
        "bracket"
    ));
}

#[test]
fn conflicting_suite_is_unsat() {
    let p = parse(ADD).unwrap();
    let mut suite = add_suite();
    suite
        .tests
        .push(TestCase::manual("dup", "add", &[10, 8], 2));
    let run = repair_syn(&p, &suite, &SynConfig::default()).unwrap();
    assert_eq!(run.result, SynResult::NoPatch(NoPatchReason::Unsat));
}

#[test]
fn tiny_budget_times_out() {
    let p = parse(BRACKET).unwrap();
    let cfg = SynConfig {
        budget_evals: 1,
        ..SynConfig::default()
    };
    let run = repair_syn(&p, &bracket_suite(), &cfg).unwrap();
    assert_eq!(run.result, SynResult::NoPatch(NoPatchReason::Timeout));
}

#[test]
fn needs_failing_test() {
    let p = parse(ADD).unwrap();
    let suite = TestSuite::new(vec![TestCase::manual("ok", "add", &[5, 5], 10)]);
    assert_eq!(
        repair_syn(&p, &suite, &SynConfig::default()),
        Err(SynError::NoFailingTests)
    );
}
