// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use proptest::prelude::*;

use repairlab::experiment::{load_corpus, CorpusBug};
use repairlab::gv::{enumerate_adequate_patches, GvConfig};
use repairlab::harness::{stabilize, TestCase, TestSuite};
use repairlab::lang::{
    evaluate, execute_angelic, parse, parse_expr, print_expr, print_program, BinOp, ExecResult,
    Expr, ForcedValues, UnOp,
};
use repairlab::oracle::{partition_domain, patch_footprint};
use repairlab::patch::Patch;
use repairlab::syn::{mine_angelic_values, repair_syn, Constraint, SynConfig, SynResult};
use repairlab::testgen::{generate_for_target, GeneratorConfig};

const STEP: u64 = 10_000;

fn corpus() -> Vec<CorpusBug> {
    load_corpus(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")).unwrap()
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-20i64..20).prop_map(Expr::int),
        any::<bool>().prop_map(Expr::boolean),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        let ops = [
            BinOp::ARITHMETIC.as_slice(),
            BinOp::COMPARISON.as_slice(),
            BinOp::LOGICAL.as_slice(),
        ]
        .concat();
        prop_oneof![
            (prop::sample::select(ops), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (prop::sample::select(vec![UnOp::Not, UnOp::Neg]), inner)
                .prop_map(|(op, e)| Expr::unary(op, e)),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_reparse(e in arb_expr()) {
        let text = print_expr(&e);
        let back = parse_expr(&text).unwrap();
        prop_assert_eq!(print_expr(&back), text);
    }

    #[test]
    fn evaluation_is_deterministic_and_monotone_in_steps(bug in 0usize..13, seed in any::<u64>(), small in 1u64..60) {
        let bugs = corpus();
        let b = &bugs[bug % bugs.len()];
        let cfg = GeneratorConfig { seed, count: 5, ..GeneratorConfig::default() };
        let suite = generate_for_target(&b.buggy, &b.function, &cfg).unwrap();
        for t in suite.iter() {
            let once = evaluate(&b.buggy, &t.function, &t.args, STEP).unwrap();
            prop_assert_eq!(once, evaluate(&b.buggy, &t.function, &t.args, STEP).unwrap());
            let short = evaluate(&b.buggy, &t.function, &t.args, small).unwrap();
            if short != ExecResult::StepLimitExceeded {
                prop_assert_eq!(short, once);
            }
        }
    }

    #[test]
    fn stabilize_is_idempotent(bug in 0usize..13, seed in any::<u64>()) {
        let bugs = corpus();
        let b = &bugs[bug % bugs.len()];
        let cfg = GeneratorConfig { seed, count: 10, ..GeneratorConfig::default() };
        let raw = generate_for_target(&b.buggy, &b.function, &cfg).unwrap();
        let once = stabilize(&b.buggy, &raw, 3, STEP);
        prop_assert_eq!(stabilize(&b.buggy, &once, 3, STEP), once.clone());
        prop_assert_eq!(TestSuite::parse(&once.to_text()).unwrap(), once);
    }

    #[test]
    fn generation_is_seed_deterministic(bug in 0usize..13, seed in any::<u64>()) {
        let bugs = corpus();
        let b = &bugs[bug % bugs.len()];
        let cfg = GeneratorConfig { seed, count: 8, ..GeneratorConfig::default() };
        let a = generate_for_target(&b.buggy, &b.function, &cfg).unwrap();
        prop_assert_eq!(a, generate_for_target(&b.buggy, &b.function, &cfg).unwrap());
    }
}

#[test]
fn corpus_programs_round_trip_through_printer() {
    for b in corpus() {
        for p in [&b.buggy, &b.reference] {
            let text = print_program(p);
            assert_eq!(print_program(&parse(&text).unwrap()), text, "{}", b.id);
        }
    }
}

#[test]
fn partition_law_holds_on_corpus() {
    for b in corpus() {
        let part = partition_domain(&b.buggy, &b.reference, &b.function, STEP).unwrap();
        assert_eq!(
            (part.i_bug.len() + part.i_correct.len()) as u64,
            part.total_points,
            "{}",
            b.id
        );
        let perfect = patch_footprint(&b.buggy, &b.reference, &b.function, STEP).unwrap();
        assert_eq!(perfect.i_patch, part.i_bug, "{}", b.id);
    }
}

#[test]
fn angelic_forced_values_reproduce_expectations() {
    for b in corpus() {
        for rec in mine_angelic_values(&b.buggy, &b.manual, STEP) {
            for (t, c) in &rec.per_test {
                let Constraint::Forced(seq) = c else { continue };
                let forced = ForcedValues::from([(rec.condition_node, seq.clone())]);
                let out = execute_angelic(&rec.instrumented, &t.function, &t.args, &forced, STEP)
                    .unwrap();
                assert_eq!(
                    out.result,
                    ExecResult::Returned(t.expected),
                    "{} {}",
                    b.id,
                    t.name
                );
            }
        }
    }
}

#[test]
fn gv_patch_lists_are_prefix_monotone() {
    for b in corpus() {
        let full = enumerate_adequate_patches(&b.buggy, &b.manual, &GvConfig::default()).unwrap();
        for k in [1, 2, 5] {
            let cfg = GvConfig {
                max_patches: k,
                ..GvConfig::default()
            };
            let part = enumerate_adequate_patches(&b.buggy, &b.manual, &cfg).unwrap();
            let n = k.min(full.patches.len());
            assert_eq!(part.patches, full.patches[..n].to_vec(), "{}", b.id);
        }
        for p in &full.patches {
            assert_eq!(Patch::parse(&p.to_text()).unwrap().to_text(), p.to_text());
        }
        let budgets = [10, 50, 200];
        let mut prev: Vec<Patch> = Vec::new();
        for budget in budgets {
            let cfg = GvConfig {
                budget_evals: budget,
                ..GvConfig::default()
            };
            let run = enumerate_adequate_patches(&b.buggy, &b.manual, &cfg).unwrap();
            assert!(run.patches.starts_with(&prev), "{} budget {budget}", b.id);
            prev = run.patches;
        }
    }
}

#[test]
fn unsat_is_stable_under_added_tests() {
    for b in corpus() {
        let Some(first) = b.manual.iter().next().cloned() else {
            continue;
        };
        let mut suite = b.manual.clone();
        suite.tests.push(TestCase {
            name: "conflict".into(),
            expected: first.expected + 1,
            ..first
        });
        let base = repair_syn(&b.buggy, &suite, &SynConfig::default()).unwrap();
        assert_eq!(base.result.tag(), "unsat", "{}", b.id);
        let cfg = GeneratorConfig {
            count: 5,
            ..GeneratorConfig::default()
        };
        for t in generate_for_target(&b.buggy, &b.function, &cfg)
            .unwrap()
            .tests
        {
            suite.tests.push(t);
            let run = repair_syn(&b.buggy, &suite, &SynConfig::default()).unwrap();
            assert!(!matches!(run.result, SynResult::Patched(_)), "{}", b.id);
            assert_eq!(run.result.tag(), "unsat", "{}", b.id);
        }
    }
}
