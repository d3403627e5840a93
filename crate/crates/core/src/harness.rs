// SPDX-License-Identifier: Apache-2.0

//! Test cases, suites, verdicts and the flaky-test stabilization protocol.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::lang::{evaluate, ExecError, ExecResult, Program, RuntimeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Manual,
    Generated { seed: u64, ordinal: usize },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Manual => f.write_str("manual"),
            Provenance::Generated { seed, ordinal } => write!(f, "gen:{seed}:{ordinal}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TestCase {
    pub name: String,
    pub function: String,
    pub args: Vec<i64>,
    pub expected: i64,
    pub provenance: Provenance,
}

impl TestCase {
    pub fn manual(name: &str, function: &str, args: &[i64], expected: i64) -> Self {
        Self {
            name: name.to_string(),
            function: function.to_string(),
            args: args.to_vec(),
            expected,
            provenance: Provenance::Manual,
        }
    }

    pub fn is_generated(&self) -> bool {
        matches!(self.provenance, Provenance::Generated { .. })
    }

    /// Why this test cannot run against `program`, if anything.
    pub fn validate(&self, program: &Program) -> Result<(), InvalidTest> {
        let f = program
            .function(&self.function)
            .ok_or_else(|| InvalidTest::UnknownFunction(self.function.clone()))?;
        if f.params.len() != self.args.len() {
            return Err(InvalidTest::ArityMismatch {
                expected: f.params.len(),
                got: self.args.len(),
            });
        }
        for (p, a) in f.params.iter().zip(&self.args) {
            if !p.domain.contains(*a) {
                return Err(InvalidTest::OutOfDomain {
                    param: p.name.clone(),
                    value: *a,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(
            f,
            "test {}: {}({}) == {}  [{}]",
            self.name,
            self.function,
            args.join(","),
            self.expected,
            self.provenance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidTest {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("expected {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("argument {value} outside the domain of `{param}`")]
    OutOfDomain { param: String, value: i64 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TestSuite {
    pub tests: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(tests: Vec<TestCase>) -> Self {
        Self { tests }
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TestCase> {
        self.tests.iter()
    }

    /// Canonical `.suite` text; reading it back yields the same suite.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tests {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SuiteFormatError> {
        let mut tests = Vec::new();
        let mut names = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let t = parse_test_line(line).map_err(|message| SuiteFormatError {
                line: i + 1,
                message,
            })?;
            if !names.insert(t.name.clone()) {
                return Err(SuiteFormatError {
                    line: i + 1,
                    message: format!("duplicate test name `{}`", t.name),
                });
            }
            tests.push(t);
        }
        Ok(Self { tests })
    }
}

impl FromIterator<TestCase> for TestSuite {
    fn from_iter<I: IntoIterator<Item = TestCase>>(iter: I) -> Self {
        Self {
            tests: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("suite line {line}: {message}")]
pub struct SuiteFormatError {
    pub line: usize,
    pub message: String,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_test_line(line: &str) -> Result<TestCase, String> {
    let rest = line.strip_prefix("test ").ok_or("expected `test`")?;
    let (name, rest) = rest.split_once(':').ok_or("expected `:` after test name")?;
    let name = name.trim();
    if !is_ident(name) {
        return Err(format!("invalid test name `{name}`"));
    }
    let (call, rest) = rest.split_once("==").ok_or("expected `==`")?;
    let (function, args) = call.trim().split_once('(').ok_or("expected `(`")?;
    let function = function.trim();
    if !is_ident(function) {
        return Err(format!("invalid function name `{function}`"));
    }
    let args = args.trim().strip_suffix(')').ok_or("expected `)`")?;
    let args = if args.trim().is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|a| {
                a.trim()
                    .parse::<i64>()
                    .map_err(|_| format!("invalid argument `{}`", a.trim()))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let (expected, prov) = rest.split_once('[').ok_or("expected `[provenance]`")?;
    let expected = expected
        .trim()
        .parse::<i64>()
        .map_err(|_| format!("invalid expected value `{}`", expected.trim()))?;
    let prov = prov.trim().strip_suffix(']').ok_or("expected `]`")?;
    let provenance = match prov.split(':').collect::<Vec<_>>().as_slice() {
        ["manual"] => Provenance::Manual,
        ["gen", seed, ordinal] => Provenance::Generated {
            seed: seed.parse().map_err(|_| format!("invalid seed `{seed}`"))?,
            ordinal: ordinal
                .parse()
                .map_err(|_| format!("invalid ordinal `{ordinal}`"))?,
        },
        _ => return Err(format!("invalid provenance `{prov}`")),
    };
    Ok(TestCase {
        name: name.to_string(),
        function: function.to_string(),
        args,
        expected,
        provenance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrashKind {
    DivisionByZero,
    ModuloByZero,
    MissingReturn,
    StepLimit,
    UnknownFunction,
    ArityMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Fail { actual: i64 },
    Crash(CrashKind),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Verdict of a single test on `program`.
pub fn run_test(program: &Program, test: &TestCase, step_limit: u64) -> Verdict {
    match evaluate(program, &test.function, &test.args, step_limit) {
        Ok(ExecResult::Returned(v)) if v == test.expected => Verdict::Pass,
        Ok(ExecResult::Returned(v)) => Verdict::Fail { actual: v },
        Ok(ExecResult::StepLimitExceeded) => Verdict::Crash(CrashKind::StepLimit),
        Ok(ExecResult::RuntimeError(e)) => Verdict::Crash(match e {
            RuntimeError::DivisionByZero => CrashKind::DivisionByZero,
            RuntimeError::ModuloByZero => CrashKind::ModuloByZero,
            RuntimeError::MissingReturn => CrashKind::MissingReturn,
        }),
        Err(ExecError::UnknownFunction(_)) => Verdict::Crash(CrashKind::UnknownFunction),
        Err(ExecError::ArityMismatch { .. }) => Verdict::Crash(CrashKind::ArityMismatch),
    }
}

pub fn run_suite<'s>(
    program: &Program,
    suite: &'s TestSuite,
    step_limit: u64,
) -> Vec<(&'s TestCase, Verdict)> {
    suite
        .iter()
        .map(|t| (t, run_test(program, t, step_limit)))
        .collect()
}

pub fn count_failing(program: &Program, suite: &TestSuite, step_limit: u64) -> usize {
    suite
        .iter()
        .filter(|t| !run_test(program, t, step_limit).is_pass())
        .count()
}

pub fn all_pass(program: &Program, suite: &TestSuite, step_limit: u64) -> bool {
    suite
        .iter()
        .all(|t| run_test(program, t, step_limit).is_pass())
}

/// Source of verdicts for the stabilization protocol. The interpreter is
/// deterministic; this seam lets tests inject unstable verdicts.
pub trait VerdictProvider {
    fn is_valid(&self, test: &TestCase) -> bool;
    fn verdict(&mut self, test: &TestCase) -> Verdict;
}

pub struct ProgramRunner<'p> {
    pub program: &'p Program,
    pub step_limit: u64,
}

impl VerdictProvider for ProgramRunner<'_> {
    fn is_valid(&self, test: &TestCase) -> bool {
        test.validate(self.program).is_ok()
    }

    fn verdict(&mut self, test: &TestCase) -> Verdict {
        run_test(self.program, test, self.step_limit)
    }
}

pub const DEFAULT_STABILIZE_ROUNDS: usize = 5;

/// Drop invalid tests, then repeatedly execute the suite `rounds` times in a
/// row and discard every test whose verdict changed, until one full series
/// of `rounds` executions is stable.
pub fn stabilize_with(
    provider: &mut dyn VerdictProvider,
    suite: &TestSuite,
    rounds: usize,
) -> TestSuite {
    let rounds = rounds.max(1);
    let mut kept: Vec<TestCase> = suite
        .iter()
        .filter(|t| provider.is_valid(t))
        .cloned()
        .collect();
    loop {
        let first: Vec<Verdict> = kept.iter().map(|t| provider.verdict(t)).collect();
        let mut unstable = vec![false; kept.len()];
        for _ in 1..rounds {
            for (i, t) in kept.iter().enumerate() {
                if provider.verdict(t) != first[i] {
                    unstable[i] = true;
                }
            }
        }
        if !unstable.iter().any(|u| *u) {
            return TestSuite::new(kept);
        }
        let mut flags = unstable.into_iter();
        kept.retain(|_| !flags.next().unwrap_or(false));
    }
}

pub fn stabilize(
    program: &Program,
    suite: &TestSuite,
    rounds: usize,
    step_limit: u64,
) -> TestSuite {
    let mut runner = ProgramRunner {
        program,
        step_limit,
    };
    stabilize_with(&mut runner, suite, rounds)
}
