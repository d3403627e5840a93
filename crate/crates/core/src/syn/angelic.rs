// SPDX-License-Identifier: Apache-2.0

//! Angelic value mining: find forced condition outcomes under which every
//! failing test passes.

use crate::harness::{run_test, TestCase, TestSuite};
use crate::lang::{
    execute_angelic, observe, ExecResult, Expr, ForcedValues, NodeId, NodeRef, Program, StmtKind,
};
use crate::patch::{apply_patch, localize, Edit, Engine, Patch, SuspiciousnessRanking};

/// Longest forced sequence tried per condition.
pub const MAX_FORCED_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteKind {
    /// Replace the condition of an existing `if`/`while`.
    Condition,
    /// Guard a statement with a new `if`.
    Precondition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RepairSite {
    pub kind: SiteKind,
    /// Condition expression id, or statement id for preconditions.
    pub node: NodeId,
}

impl RepairSite {
    pub fn edit(&self, expr: Expr) -> Edit {
        match self.kind {
            SiteKind::Condition => Edit::ReplaceExpr(self.node, expr),
            SiteKind::Precondition => Edit::WrapWithPrecondition(self.node, expr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    /// Sequence that makes a failing test pass.
    Forced(Vec<bool>),
    /// Sequence observed on a passing test.
    Unconstrained(Vec<bool>),
}

impl Constraint {
    pub fn sequence(&self) -> &[bool] {
        match self {
            Constraint::Forced(s) | Constraint::Unconstrained(s) => s,
        }
    }
}

/// A valuation observed at one evaluation of the condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub env: Vec<(String, i64)>,
    pub value: bool,
}

impl Sample {
    pub fn get(&self, var: &str) -> Option<i64> {
        self.env
            .iter()
            .rev()
            .find(|(n, _)| n == var)
            .map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngelicRecord {
    pub site: RepairSite,
    /// The condition node in `instrumented` (for preconditions, the guard).
    pub condition_node: NodeId,
    pub instrumented: Program,
    pub per_test: Vec<(TestCase, Constraint)>,
    pub samples: Vec<Sample>,
}

/// Repair sites in descending suspiciousness. A ranked `if`/`while`
/// condition yields a condition site; a ranked non-`let` statement yields a
/// precondition site.
pub fn repair_sites(program: &Program, ranking: &SuspiciousnessRanking) -> Vec<RepairSite> {
    let conditions = program.condition_nodes();
    let mut out = Vec::new();
    for (id, score) in &ranking.entries {
        if *score <= 0.0 {
            continue;
        }
        match program.node(*id) {
            Some(NodeRef::Expr(_)) if conditions.contains(id) => out.push(RepairSite {
                kind: SiteKind::Condition,
                node: *id,
            }),
            Some(NodeRef::Stmt(s)) if !matches!(s.kind, StmtKind::Let { .. }) => {
                out.push(RepairSite {
                    kind: SiteKind::Precondition,
                    node: *id,
                })
            }
            _ => {}
        }
    }
    out
}

/// Forced sequences in the order they are tried.
pub fn forced_candidates() -> Vec<Vec<bool>> {
    let mut out = vec![vec![false; MAX_FORCED_LEN], vec![true; MAX_FORCED_LEN]];
    for n in 1..MAX_FORCED_LEN {
        let mut s = vec![true; n];
        s.push(false);
        out.push(s);
        let mut s = vec![false; n];
        s.push(true);
        out.push(s);
    }
    out
}

/// The program with the site's condition in place: unchanged for condition
/// sites, or with the statement wrapped in `if (true)`.
fn instrument(program: &Program, site: RepairSite) -> Option<(Program, NodeId)> {
    match site.kind {
        SiteKind::Condition => Some((program.clone(), site.node)),
        SiteKind::Precondition => {
            let patch = Patch::new(
                vec![Edit::WrapWithPrecondition(site.node, Expr::boolean(true))],
                Engine::Synthesis,
                0,
            );
            let instrumented = apply_patch(program, &patch).ok()?;
            // The wrapping `if` gets the first fresh id, its guard the next.
            let guard = NodeId(program.max_node_id()?.0 + 2);
            Some((instrumented, guard))
        }
    }
}

/// Mine one site. `None` when some failing test has no feasible sequence.
pub fn mine_site(
    program: &Program,
    suite: &TestSuite,
    site: RepairSite,
    step_limit: u64,
) -> Option<AngelicRecord> {
    let (instrumented, cond) = instrument(program, site)?;
    let mut per_test = Vec::new();
    let mut samples = Vec::new();
    for t in suite.iter() {
        let passing = run_test(&instrumented, t, step_limit).is_pass();
        let forced = if passing {
            ForcedValues::new()
        } else {
            let seq = forced_candidates().into_iter().find(|seq| {
                let forced = ForcedValues::from([(cond, seq.clone())]);
                matches!(
                    execute_angelic(&instrumented, &t.function, &t.args, &forced, step_limit),
                    Ok(out) if out.result == ExecResult::Returned(t.expected)
                )
            })?;
            ForcedValues::from([(cond, seq)])
        };
        let (_, obs) = observe(
            &instrumented,
            &t.function,
            &t.args,
            &forced,
            cond,
            step_limit,
        )
        .ok()?;
        let seq: Vec<bool> = obs.iter().map(|o| o.value).collect();
        samples.extend(obs.into_iter().map(|o| Sample {
            env: o.env,
            value: o.value,
        }));
        let c = if passing {
            Constraint::Unconstrained(seq)
        } else {
            Constraint::Forced(seq)
        };
        per_test.push((t.clone(), c));
    }
    Some(AngelicRecord {
        site,
        condition_node: cond,
        instrumented,
        per_test,
        samples,
    })
}

/// Records for every feasible site, in site order.
pub fn mine_angelic_values(
    program: &Program,
    suite: &TestSuite,
    step_limit: u64,
) -> Vec<AngelicRecord> {
    let Ok(ranking) = localize(program, suite, step_limit) else {
        return Vec::new();
    };
    repair_sites(program, &ranking)
        .into_iter()
        .filter_map(|site| mine_site(program, suite, site, step_limit))
        .collect()
}
