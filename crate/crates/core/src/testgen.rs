// SPDX-License-Identifier: Apache-2.0

//! Regression test generation: random inputs drawn from the declared
//! domains, with the current program's output recorded as the oracle.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with the configured
//! seed and keyed per target by selecting the stream from a 64-bit FNV-1a
//! hash of the function name. ChaCha output is specified independently of
//! platform and word size, so suites are reproducible everywhere.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::harness::{Provenance, TestCase, TestSuite};
use crate::lang::{evaluate, ExecResult, Program, DEFAULT_STEP_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    UniformRandom,
    /// One draw in four picks a domain endpoint or zero instead.
    BoundaryBiased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub count: usize,
    pub step_limit: u64,
    pub strategy: Strategy,
}

pub const DEFAULT_TEST_COUNT: usize = 40;

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            count: DEFAULT_TEST_COUNT,
            step_limit: DEFAULT_STEP_LIMIT,
            strategy: Strategy::BoundaryBiased,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Generate up to `cfg.count` tests for `fn_name`. Inputs that crash or
/// exceed the step limit are discarded, as are repeated input points.
pub fn generate_for_target(
    program: &Program,
    fn_name: &str,
    cfg: &GeneratorConfig,
) -> Result<TestSuite, GenError> {
    let f = program
        .function(fn_name)
        .ok_or_else(|| GenError::UnknownFunction(fn_name.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(fnv1a(fn_name));
    let domains = f.domains();
    let space: u128 = domains.iter().map(|d| d.len() as u128).product();
    let max_attempts = cfg.count.saturating_mul(16).saturating_add(64);
    let mut seen = HashSet::new();
    let mut tests = Vec::new();
    let mut attempts = 0;
    while tests.len() < cfg.count && attempts < max_attempts && (seen.len() as u128) < space {
        attempts += 1;
        let args: Vec<i64> = domains
            .iter()
            .map(|d| {
                if cfg.strategy == Strategy::BoundaryBiased && rng.random_ratio(1, 4) {
                    let mut picks = vec![d.lo, d.hi];
                    if d.contains(0) && d.lo != 0 && d.hi != 0 {
                        picks.push(0);
                    }
                    picks[rng.random_range(0..picks.len())]
                } else {
                    rng.random_range(d.lo..=d.hi)
                }
            })
            .collect();
        if !seen.insert(args.clone()) {
            continue;
        }
        if let Ok(ExecResult::Returned(v)) = evaluate(program, fn_name, &args, cfg.step_limit) {
            let ordinal = tests.len();
            tests.push(TestCase {
                name: format!("gen_{fn_name}_{ordinal}"),
                function: fn_name.to_string(),
                args,
                expected: v,
                provenance: Provenance::Generated {
                    seed: cfg.seed,
                    ordinal,
                },
            });
        }
    }
    Ok(TestSuite::new(tests))
}

/// Order targets the way generated tests are consumed: smallest function
/// body first, ties by position in the source. Duplicates are dropped.
pub fn order_targets(program: &Program, fns: &[String]) -> Result<Vec<String>, GenError> {
    let mut keyed = Vec::new();
    for name in fns {
        let idx = program
            .function_index(name)
            .ok_or_else(|| GenError::UnknownFunction(name.clone()))?;
        if !keyed
            .iter()
            .any(|(_, _, n): &(usize, usize, String)| n == name)
        {
            keyed.push((program.functions[idx].size(), idx, name.clone()));
        }
    }
    keyed.sort();
    Ok(keyed.into_iter().map(|(_, _, n)| n).collect())
}

pub fn generate_for_targets(
    program: &Program,
    fns: &[String],
    cfg: &GeneratorConfig,
) -> Result<TestSuite, GenError> {
    let mut tests = Vec::new();
    for name in order_targets(program, fns)? {
        tests.extend(generate_for_target(program, &name, cfg)?.tests);
    }
    Ok(TestSuite::new(tests))
}
