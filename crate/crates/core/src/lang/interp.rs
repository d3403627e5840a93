// SPDX-License-Identifier: Apache-2.0

//! Deterministic step-limited interpreter.
//!
//! Every executed statement costs one step and every loop iteration costs one
//! more. Optional instrumentation records coverage, a log of condition
//! outcomes, and variable valuations at a probed condition. Conditions can be
//! overridden with forced boolean sequences, which is how angelic values are
//! explored.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::ast::*;

pub const DEFAULT_STEP_LIMIT: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum RuntimeError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("modulo by zero")]
    ModuloByZero,
    /// Control reached the end of the function body without a `return`.
    #[error("missing return")]
    MissingReturn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecResult {
    Returned(i64),
    StepLimitExceeded,
    RuntimeError(RuntimeError),
}

impl ExecResult {
    pub fn value(&self) -> Option<i64> {
        match self {
            ExecResult::Returned(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    pub result: ExecResult,
    pub coverage: BTreeSet<NodeId>,
    /// `(condition node, value used)` in evaluation order.
    pub cond_log: Vec<(NodeId, bool)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{function}` takes {expected} arguments, got {got}")]
    ArityMismatch {
        function: String,
        expected: usize,
        got: usize,
    },
}

/// Forced condition values, consumed in order per node.
pub type ForcedValues = BTreeMap<NodeId, Vec<bool>>;

/// Variable valuation captured when a probed condition is evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub env: Vec<(String, i64)>,
    pub value: bool,
}

/// Run `fn_name` on `args` without instrumentation.
pub fn evaluate(
    program: &Program,
    fn_name: &str,
    args: &[i64],
    step_limit: u64,
) -> Result<ExecResult, ExecError> {
    let f = lookup(program, fn_name, args)?;
    let mut m = Machine::new(step_limit);
    Ok(m.run(f, args))
}

/// Run `fn_name` on `args`, recording coverage and condition outcomes.
pub fn execute(
    program: &Program,
    fn_name: &str,
    args: &[i64],
    step_limit: u64,
) -> Result<ExecOutcome, ExecError> {
    execute_angelic(program, fn_name, args, &ForcedValues::new(), step_limit)
}

/// Like [`execute`], but conditions listed in `forced` take the given values
/// in order; once a node's list is exhausted its real value is used.
pub fn execute_angelic(
    program: &Program,
    fn_name: &str,
    args: &[i64],
    forced: &ForcedValues,
    step_limit: u64,
) -> Result<ExecOutcome, ExecError> {
    let f = lookup(program, fn_name, args)?;
    let mut m = Machine::new(step_limit);
    m.coverage = Some(BTreeSet::new());
    m.cond_log = Some(Vec::new());
    if !forced.is_empty() {
        m.forced = Some(forced);
    }
    let result = m.run(f, args);
    Ok(ExecOutcome {
        result,
        coverage: m.coverage.unwrap_or_default(),
        cond_log: m.cond_log.unwrap_or_default(),
    })
}

/// Execute with forcing and capture the valuation at each evaluation of `probe`.
pub fn observe(
    program: &Program,
    fn_name: &str,
    args: &[i64],
    forced: &ForcedValues,
    probe: NodeId,
    step_limit: u64,
) -> Result<(ExecResult, Vec<Observation>), ExecError> {
    let f = lookup(program, fn_name, args)?;
    let mut m = Machine::new(step_limit);
    if !forced.is_empty() {
        m.forced = Some(forced);
    }
    m.probe = Some((probe, Vec::new()));
    let result = m.run(f, args);
    Ok((result, m.probe.map(|(_, obs)| obs).unwrap_or_default()))
}

fn lookup<'p>(
    program: &'p Program,
    fn_name: &str,
    args: &[i64],
) -> Result<&'p FunctionDef, ExecError> {
    let f = program
        .function(fn_name)
        .ok_or_else(|| ExecError::UnknownFunction(fn_name.to_string()))?;
    if f.params.len() != args.len() {
        return Err(ExecError::ArityMismatch {
            function: fn_name.to_string(),
            expected: f.params.len(),
            got: args.len(),
        });
    }
    Ok(f)
}

enum Halt {
    StepLimit,
    Runtime(RuntimeError),
}

enum Flow {
    Normal,
    Return(i64),
}

struct Machine<'a> {
    steps: u64,
    limit: u64,
    env: Vec<(&'a str, i64)>,
    coverage: Option<BTreeSet<NodeId>>,
    cond_log: Option<Vec<(NodeId, bool)>>,
    forced: Option<&'a ForcedValues>,
    cursors: BTreeMap<NodeId, usize>,
    probe: Option<(NodeId, Vec<Observation>)>,
}

impl<'a> Machine<'a> {
    fn new(limit: u64) -> Self {
        Self {
            steps: 0,
            limit,
            env: Vec::new(),
            coverage: None,
            cond_log: None,
            forced: None,
            cursors: BTreeMap::new(),
            probe: None,
        }
    }

    fn run(&mut self, f: &'a FunctionDef, args: &[i64]) -> ExecResult {
        self.env = f
            .params
            .iter()
            .map(|p| p.name.as_str())
            .zip(args.iter().copied())
            .collect();
        match self.block(&f.body) {
            Ok(Flow::Return(v)) => ExecResult::Returned(v),
            Ok(Flow::Normal) => ExecResult::RuntimeError(RuntimeError::MissingReturn),
            Err(Halt::StepLimit) => ExecResult::StepLimitExceeded,
            Err(Halt::Runtime(e)) => ExecResult::RuntimeError(e),
        }
    }

    fn cover(&mut self, id: NodeId) {
        if let Some(c) = &mut self.coverage {
            c.insert(id);
        }
    }

    fn step(&mut self) -> Result<(), Halt> {
        self.steps += 1;
        if self.steps > self.limit {
            Err(Halt::StepLimit)
        } else {
            Ok(())
        }
    }

    fn block(&mut self, b: &'a Block) -> Result<Flow, Halt> {
        self.cover(b.id);
        let mark = self.env.len();
        for s in &b.stmts {
            if let Flow::Return(v) = self.stmt(s)? {
                self.env.truncate(mark);
                return Ok(Flow::Return(v));
            }
        }
        self.env.truncate(mark);
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &'a Stmt) -> Result<Flow, Halt> {
        self.step()?;
        self.cover(s.id);
        match &s.kind {
            StmtKind::Let { name, value } => {
                let v = self.int(value)?;
                self.env.push((name.as_str(), v));
            }
            StmtKind::Assign { name, value } => {
                let v = self.int(value)?;
                if let Some(slot) = self.env.iter_mut().rev().find(|(n, _)| *n == name.as_str()) {
                    slot.1 = v;
                }
            }
            StmtKind::Return(value) => return Ok(Flow::Return(self.int(value)?)),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                if self.condition(cond)? {
                    return self.block(then_block);
                } else if let Some(b) = else_block {
                    return self.block(b);
                }
            }
            StmtKind::While { cond, body } => loop {
                if !self.condition(cond)? {
                    break;
                }
                self.step()?;
                if let Flow::Return(v) = self.block(body)? {
                    return Ok(Flow::Return(v));
                }
            },
        }
        Ok(Flow::Normal)
    }

    fn condition(&mut self, cond: &'a Expr) -> Result<bool, Halt> {
        let forced = self.forced.and_then(|map| {
            let seq = map.get(&cond.id)?;
            let cursor = self.cursors.entry(cond.id).or_insert(0);
            let v = seq.get(*cursor).copied()?;
            *cursor += 1;
            Some(v)
        });
        let value = match forced {
            Some(v) => {
                self.cover(cond.id);
                v
            }
            None => self.boolean(cond)?,
        };
        if let Some(log) = &mut self.cond_log {
            log.push((cond.id, value));
        }
        if let Some((probe, obs)) = &mut self.probe {
            if *probe == cond.id {
                obs.push(Observation {
                    env: self.env.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
                    value,
                });
            }
        }
        Ok(value)
    }

    fn lookup(&self, name: &str) -> i64 {
        self.env
            .iter()
            .rev()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
            .unwrap_or(0)
    }

    fn boolean(&mut self, e: &'a Expr) -> Result<bool, Halt> {
        Ok(self.int(e)? != 0)
    }

    /// Evaluate to an integer; booleans are represented as 0/1.
    fn int(&mut self, e: &'a Expr) -> Result<i64, Halt> {
        self.cover(e.id);
        Ok(match &e.kind {
            ExprKind::Int(v) => *v,
            ExprKind::Bool(b) => *b as i64,
            ExprKind::Var(name) => self.lookup(name),
            ExprKind::Unary(UnOp::Not, x) => (self.int(x)? == 0) as i64,
            ExprKind::Unary(UnOp::Neg, x) => self.int(x)?.wrapping_neg(),
            ExprKind::Binary(BinOp::And, l, r) => (self.boolean(l)? && self.boolean(r)?) as i64,
            ExprKind::Binary(BinOp::Or, l, r) => (self.boolean(l)? || self.boolean(r)?) as i64,
            ExprKind::Binary(op, l, r) => {
                let a = self.int(l)?;
                let b = self.int(r)?;
                match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                    BinOp::Div if b == 0 => {
                        return Err(Halt::Runtime(RuntimeError::DivisionByZero))
                    }
                    BinOp::Div => a.wrapping_div(b),
                    BinOp::Rem if b == 0 => return Err(Halt::Runtime(RuntimeError::ModuloByZero)),
                    BinOp::Rem => a.wrapping_rem(b),
                    cmp => cmp.compare(a, b) as i64,
                }
            }
        })
    }
}
