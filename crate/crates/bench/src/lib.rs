// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use std::path::{Path, PathBuf};

use repairlab::experiment::{load_bug, CorpusBug};

/// The corpus shipped at the workspace root.
pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Load one shipped bug by id. Panics if it is missing or malformed.
pub fn corpus_bug(id: &str) -> CorpusBug {
    load_bug(&corpus_dir().join(id)).unwrap_or_else(|e| panic!("loading {id}: {e}"))
}
