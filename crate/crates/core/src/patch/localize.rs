// SPDX-License-Identifier: Apache-2.0

//! Spectrum-based fault localization with the Ochiai coefficient.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::harness::{run_test, TestSuite};
use crate::lang::{execute, NodeId, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocalizeError {
    #[error("the suite has no failing test")]
    NoFailingTests,
}

/// Covered nodes, most suspicious first; ties by ascending node id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuspiciousnessRanking {
    pub entries: Vec<(NodeId, f64)>,
}

impl SuspiciousnessRanking {
    pub fn score(&self, id: NodeId) -> Option<f64> {
        self.entries.iter().find(|(n, _)| *n == id).map(|(_, s)| *s)
    }
}

/// `failed(n) / sqrt(total_failed * (failed(n) + passed(n)))`
pub fn ochiai(failed: usize, passed: usize, total_failed: usize) -> f64 {
    if failed == 0 || total_failed == 0 {
        return 0.0;
    }
    failed as f64 / ((total_failed * (failed + passed)) as f64).sqrt()
}

pub fn localize(
    program: &Program,
    suite: &TestSuite,
    step_limit: u64,
) -> Result<SuspiciousnessRanking, LocalizeError> {
    let mut counts: BTreeMap<NodeId, (usize, usize)> = BTreeMap::new();
    let mut total_failed = 0;
    for t in suite.iter() {
        let failing = !run_test(program, t, step_limit).is_pass();
        if failing {
            total_failed += 1;
        }
        let Ok(out) = execute(program, &t.function, &t.args, step_limit) else {
            continue;
        };
        for id in out.coverage {
            let c = counts.entry(id).or_default();
            if failing {
                c.0 += 1;
            } else {
                c.1 += 1;
            }
        }
    }
    if total_failed == 0 {
        return Err(LocalizeError::NoFailingTests);
    }
    let mut entries: Vec<(NodeId, f64)> = counts
        .into_iter()
        .map(|(id, (f, p))| (id, ochiai(f, p, total_failed)))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(SuspiciousnessRanking { entries })
}
