// SPDX-License-Identifier: Apache-2.0

//! Seeded-bug corpora and the multi-seed experiment runner.
//!
//! A corpus is a directory of bug directories, each holding `buggy.mrl`,
//! `reference.mrl`, `manual.suite` and optionally `meta.txt` with
//! `key=value` lines (`fn=<name>`, `tags=gv,syn`).

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::gv::{enumerate_adequate_patches, GvConfig};
use crate::harness::{run_test, TestSuite};
use crate::lang::{parse, Program, DEFAULT_STEP_LIMIT};
use crate::meta::{min_impact, unsat_guided, MetaConfig, MetaReport};
use crate::oracle::{classify, PatchVerdict};
use crate::patch::Patch;
use crate::syn::{repair_syn, SynConfig};
use crate::testgen::GeneratorConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("{path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusBug {
    pub id: String,
    pub buggy: Program,
    pub reference: Program,
    pub manual: TestSuite,
    /// Function whose domain the oracle enumerates.
    pub function: String,
    pub tags: Vec<String>,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|e| CorpusError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn invalid(path: &Path, message: impl fmt::Display) -> CorpusError {
    CorpusError::Invalid {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub fn load_bug(dir: &Path) -> Result<CorpusBug, CorpusError> {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let program = |name: &str| {
        let path = dir.join(name);
        parse(&read(&path)?).map_err(|e| invalid(&path, e))
    };
    let buggy = program("buggy.mrl")?;
    let reference = program("reference.mrl")?;
    let suite_path = dir.join("manual.suite");
    let manual = TestSuite::parse(&read(&suite_path)?).map_err(|e| invalid(&suite_path, e))?;
    let mut function = None;
    let mut tags = Vec::new();
    let meta_path = dir.join("meta.txt");
    if meta_path.exists() {
        for line in read(&meta_path)?.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some(("fn", v)) => function = Some(v.trim().to_string()),
                Some(("tags", v)) => {
                    tags = v
                        .split(',')
                        .map(|t| t.trim().to_string())
                        .filter(|t| !t.is_empty())
                        .collect()
                }
                Some((_, _)) => {}
                None => {
                    return Err(invalid(
                        &meta_path,
                        format!("expected key=value, got `{line}`"),
                    ))
                }
            }
        }
    }
    let function = match function {
        Some(f) => f,
        None => manual
            .iter()
            .find(|t| !run_test(&buggy, t, DEFAULT_STEP_LIMIT).is_pass())
            .or_else(|| manual.iter().next())
            .map(|t| t.function.clone())
            .ok_or_else(|| invalid(&suite_path, "empty suite"))?,
    };
    Ok(CorpusBug {
        id,
        buggy,
        reference,
        manual,
        function,
        tags,
    })
}

fn bug_dirs(corpus: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let entries = fs::read_dir(corpus).map_err(|e| CorpusError::Read {
        path: corpus.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Bugs sorted by id.
pub fn load_corpus(corpus: &Path) -> Result<Vec<CorpusBug>, CorpusError> {
    bug_dirs(corpus)?.iter().map(|d| load_bug(d)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub bug: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.bug, self.message)
    }
}

pub fn check_bug(bug: &CorpusBug) -> Vec<String> {
    let mut out = Vec::new();
    let (fb, fr) = (
        bug.buggy.function(&bug.function),
        bug.reference.function(&bug.function),
    );
    match (fb, fr) {
        (Some(a), Some(b)) if a.domains() == b.domains() => {}
        _ => out.push(format!("signature mismatch for `{}`", bug.function)),
    }
    for t in bug.manual.iter() {
        if let Err(e) = t
            .validate(&bug.buggy)
            .and_then(|_| t.validate(&bug.reference))
        {
            out.push(format!("invalid test `{}`: {e}", t.name));
        }
    }
    let failing = bug
        .manual
        .iter()
        .filter(|t| !run_test(&bug.buggy, t, DEFAULT_STEP_LIMIT).is_pass())
        .count();
    if failing == 0 {
        out.push("no failing test".into());
    }
    if failing == bug.manual.len() {
        out.push("no passing test".into());
    }
    for t in bug.manual.iter() {
        if !run_test(&bug.reference, t, DEFAULT_STEP_LIMIT).is_pass() {
            out.push(format!("oracle mismatch: `{}` fails on reference", t.name));
        }
    }
    out
}

/// Empty iff every bug loads and satisfies the corpus invariants.
pub fn validate_corpus(corpus: &Path) -> Vec<Violation> {
    let dirs = match bug_dirs(corpus) {
        Ok(d) => d,
        Err(e) => {
            return vec![Violation {
                bug: corpus.display().to_string(),
                message: e.to_string(),
            }]
        }
    };
    let mut out = Vec::new();
    for dir in dirs {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match load_bug(&dir) {
            Ok(bug) => out.extend(check_bug(&bug).into_iter().map(|message| Violation {
                bug: name.clone(),
                message,
            })),
            Err(e) => out.push(Violation {
                bug: name,
                message: e.to_string(),
            }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    MinImpact,
    UnsatGuided,
    PlainGv,
    PlainSyn,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::MinImpact => "minimpact",
            Mode::UnsatGuided => "unsatguided",
            Mode::PlainGv => "plain-gv",
            Mode::PlainSyn => "plain-syn",
        }
    }

    fn uses_gv(self) -> bool {
        matches!(self, Mode::MinImpact | Mode::PlainGv)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minimpact" => Ok(Mode::MinImpact),
            "unsatguided" => Ok(Mode::UnsatGuided),
            "plain-gv" => Ok(Mode::PlainGv),
            "plain-syn" => Ok(Mode::PlainSyn),
            other => Err(format!(
                "unknown mode `{other}` (expected minimpact, unsatguided, plain-gv or plain-syn)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub gv_budget: u64,
    pub syn_budget: u64,
    pub gen_count: usize,
    /// Seed of the generate-and-validate search order; fixed across
    /// generator seeds so the plain patch is the same in every run.
    pub engine_seed: u64,
    pub step_limit: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let meta = MetaConfig::default();
        Self {
            mode: Mode::UnsatGuided,
            seeds: (1..=30).collect(),
            gv_budget: meta.gv.budget_evals,
            syn_budget: meta.syn.budget_evals,
            gen_count: meta.gen.count,
            engine_seed: 0,
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }
}

impl ExperimentConfig {
    pub fn meta_config(&self, seed: u64) -> MetaConfig {
        MetaConfig {
            gv: GvConfig {
                budget_evals: self.gv_budget,
                seed: self.engine_seed,
                step_limit: self.step_limit,
                ..GvConfig::default()
            },
            syn: SynConfig {
                budget_evals: self.syn_budget,
                step_limit: self.step_limit,
                ..SynConfig::default()
            },
            gen: GeneratorConfig {
                seed,
                count: self.gen_count,
                step_limit: self.step_limit,
                ..GeneratorConfig::default()
            },
            ..MetaConfig::default()
        }
    }
}

/// Outcome of one (bug, seed) cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub bug: String,
    pub seed: u64,
    pub plain_verdict: Option<PatchVerdict>,
    pub final_patch: Option<Patch>,
    pub final_verdict: Option<PatchVerdict>,
    /// Final patch structurally differs from the plain engine's patch.
    pub changed: bool,
    pub generated_tests: usize,
    /// Failing generated tests for the returned patch.
    pub fails: usize,
    pub adequate_patches: usize,
    pub contradictions: usize,
    pub removals: usize,
    pub cost: u64,
    pub error: Option<String>,
    pub report: Option<MetaReport>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub seeds: Vec<u64>,
    /// Bug ids in corpus order, with the plain engine's patch verdict.
    pub bugs: Vec<(String, Option<PatchVerdict>)>,
    /// Sorted by bug, then seed.
    pub runs: Vec<RunRecord>,
}

fn verdict_of(
    bug: &CorpusBug,
    patch: Option<&Patch>,
    step_limit: u64,
) -> Result<Option<PatchVerdict>, String> {
    match patch {
        None => Ok(None),
        Some(p) => classify(&bug.buggy, &bug.reference, p, &bug.function, step_limit)
            .map(|c| Some(c.verdict))
            .map_err(|e| e.to_string()),
    }
}

struct Plain {
    patch: Option<Patch>,
    verdict: Option<PatchVerdict>,
    adequate: usize,
    cost: u64,
}

fn plain_run(bug: &CorpusBug, cfg: &ExperimentConfig) -> Result<Plain, String> {
    let meta = cfg.meta_config(0);
    let (patch, adequate, cost) = if cfg.mode.uses_gv() {
        let run = enumerate_adequate_patches(&bug.buggy, &bug.manual, &meta.gv)
            .map_err(|e| e.to_string())?;
        let n = run.patches.len();
        (run.patches.into_iter().next(), n, run.evals)
    } else {
        let run = repair_syn(&bug.buggy, &bug.manual, &meta.syn).map_err(|e| e.to_string())?;
        let n = usize::from(run.result.patch().is_some());
        (run.result.patch().cloned(), n, run.cost)
    };
    let verdict = verdict_of(bug, patch.as_ref(), cfg.step_limit)?;
    Ok(Plain {
        patch,
        verdict,
        adequate,
        cost,
    })
}

fn run_cell(
    bug: &CorpusBug,
    seed: u64,
    cfg: &ExperimentConfig,
    plain: &Result<Plain, String>,
) -> RunRecord {
    let mut rec = RunRecord {
        bug: bug.id.clone(),
        seed,
        plain_verdict: None,
        final_patch: None,
        final_verdict: None,
        changed: false,
        generated_tests: 0,
        fails: 0,
        adequate_patches: 0,
        contradictions: 0,
        removals: 0,
        cost: 0,
        error: None,
        report: None,
    };
    let plain = match plain {
        Ok(p) => p,
        Err(e) => {
            rec.error = Some(e.clone());
            return rec;
        }
    };
    rec.plain_verdict = plain.verdict;
    let meta = cfg.meta_config(seed);
    let report = match cfg.mode {
        Mode::PlainGv | Mode::PlainSyn => {
            rec.final_patch = plain.patch.clone();
            rec.final_verdict = plain.verdict;
            rec.adequate_patches = plain.adequate;
            rec.cost = plain.cost;
            return rec;
        }
        Mode::MinImpact => min_impact(&bug.buggy, &bug.manual, &meta),
        Mode::UnsatGuided => unsat_guided(&bug.buggy, &bug.manual, &meta),
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.final_patch = report.returned_patch.clone();
    rec.final_verdict = match verdict_of(bug, rec.final_patch.as_ref(), cfg.step_limit) {
        Ok(v) => v,
        Err(e) => {
            rec.error = Some(e);
            return rec;
        }
    };
    rec.changed = rec.final_patch.as_ref().map(Patch::edits_text)
        != plain.patch.as_ref().map(Patch::edits_text);
    rec.generated_tests = report.generated_tests;
    rec.fails = rec
        .final_patch
        .as_ref()
        .and_then(|p| report.fail_counts.get(&p.meta.ordinal))
        .copied()
        .unwrap_or(0);
    rec.adequate_patches = if cfg.mode == Mode::MinImpact {
        report.adequate_patches
    } else {
        usize::from(rec.final_patch.is_some())
    };
    rec.contradictions = report.contradiction_tests.len();
    rec.removals = report.removed_tests.len();
    rec.cost = report.engine_cost;
    rec.report = Some(report);
    rec
}

/// Run every (bug, seed) cell. Cells run in parallel on the current rayon
/// pool; the result order is fixed.
pub fn run_experiment(corpus: &[CorpusBug], cfg: &ExperimentConfig) -> ExperimentReport {
    let plains: Vec<Result<Plain, String>> = corpus.par_iter().map(|b| plain_run(b, cfg)).collect();
    let cells: Vec<(usize, u64)> = (0..corpus.len())
        .flat_map(|i| cfg.seeds.iter().map(move |s| (i, *s)))
        .collect();
    let mut runs: Vec<RunRecord> = cells
        .par_iter()
        .map(|(i, seed)| run_cell(&corpus[*i], *seed, cfg, &plains[*i]))
        .collect();
    runs.sort_by(|a, b| a.bug.cmp(&b.bug).then(a.seed.cmp(&b.seed)));
    let mut bugs: Vec<(String, Option<PatchVerdict>)> = corpus
        .iter()
        .zip(&plains)
        .map(|(b, p)| (b.id.clone(), p.as_ref().ok().and_then(|p| p.verdict)))
        .collect();
    bugs.sort_by(|a, b| a.0.cmp(&b.0));
    ExperimentReport {
        mode: cfg.mode,
        seeds: cfg.seeds.clone(),
        bugs,
        runs,
    }
}

pub const REPORT_HEADER: [&str; 13] = [
    "Bug ID",
    "Mode",
    "Seeds",
    "Plain patch verdict",
    "Avg #EvoTests",
    "Avg # Fails",
    "Avg # test-suite ad. patches",
    "Avg #Contradiction",
    "Avg #Remove",
    "Avg cost (evals)",
    "Change ratio",
    "Correct ratio",
    "Failures",
];

pub const RUNS_HEADER: [&str; 13] = [
    "Bug ID",
    "Seed",
    "Plain verdict",
    "Final verdict",
    "Changed",
    "#EvoTests",
    "# Fails",
    "# test-suite ad. patches",
    "#Contradiction",
    "#Remove",
    "Cost (evals)",
    "Final patch",
    "Error",
];

/// Aggregate numbers for one bug.
#[derive(Debug, Clone, PartialEq)]
pub struct BugSummary {
    pub bug: String,
    pub plain_verdict: Option<PatchVerdict>,
    pub attempted: usize,
    pub failures: usize,
    pub changed: usize,
    pub correct: usize,
    pub avg_generated: f64,
    pub avg_fails: f64,
    pub avg_adequate: f64,
    pub avg_contradictions: f64,
    pub avg_removals: f64,
    pub avg_cost: f64,
}

impl BugSummary {
    /// Ratio denominator: seeds that ran without a hard failure.
    pub fn valid(&self) -> usize {
        self.attempted - self.failures
    }

    pub fn change_ratio(&self) -> String {
        format!("{}/{}", self.changed, self.valid())
    }

    pub fn correct_ratio(&self) -> String {
        format!("{}/{}", self.correct, self.valid())
    }
}

fn verdict_cell(v: Option<PatchVerdict>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn avg(runs: &[&RunRecord], f: impl Fn(&RunRecord) -> f64) -> f64 {
    if runs.is_empty() {
        0.0
    } else {
        runs.iter().map(|r| f(r)).sum::<f64>() / runs.len() as f64
    }
}

impl ExperimentReport {
    pub fn summaries(&self) -> Vec<BugSummary> {
        self.bugs
            .iter()
            .map(|(id, plain)| {
                let all: Vec<&RunRecord> = self.runs.iter().filter(|r| &r.bug == id).collect();
                let ok: Vec<&RunRecord> =
                    all.iter().copied().filter(|r| r.error.is_none()).collect();
                BugSummary {
                    bug: id.clone(),
                    plain_verdict: *plain,
                    attempted: all.len(),
                    failures: all.len() - ok.len(),
                    changed: ok.iter().filter(|r| r.changed).count(),
                    correct: ok
                        .iter()
                        .filter(|r| r.final_verdict == Some(PatchVerdict::Correct))
                        .count(),
                    avg_generated: avg(&ok, |r| r.generated_tests as f64),
                    avg_fails: avg(&ok, |r| r.fails as f64),
                    avg_adequate: avg(&ok, |r| r.adequate_patches as f64),
                    avg_contradictions: avg(&ok, |r| r.contradictions as f64),
                    avg_removals: avg(&ok, |r| r.removals as f64),
                    avg_cost: avg(&ok, |r| r.cost as f64),
                }
            })
            .collect()
    }

    /// One row per bug.
    pub fn report_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(REPORT_HEADER).expect("in-memory write");
        let seeds = self.seeds.len().to_string();
        for s in self.summaries() {
            w.write_record([
                s.bug.clone(),
                self.mode.to_string(),
                seeds.clone(),
                verdict_cell(s.plain_verdict),
                format!("{:.2}", s.avg_generated),
                format!("{:.2}", s.avg_fails),
                format!("{:.2}", s.avg_adequate),
                format!("{:.2}", s.avg_contradictions),
                format!("{:.2}", s.avg_removals),
                format!("{:.1}", s.avg_cost),
                s.change_ratio(),
                s.correct_ratio(),
                s.failures.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// One row per (bug, seed).
    pub fn runs_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(RUNS_HEADER).expect("in-memory write");
        for r in &self.runs {
            let patch = r
                .final_patch
                .as_ref()
                .map(|p| p.edits_text().trim_end().replace('\n', " ; "))
                .unwrap_or_default();
            w.write_record([
                r.bug.clone(),
                r.seed.to_string(),
                verdict_cell(r.plain_verdict),
                verdict_cell(r.final_verdict),
                r.changed.to_string(),
                r.generated_tests.to_string(),
                r.fails.to_string(),
                r.adequate_patches.to_string(),
                r.contradictions.to_string(),
                r.removals.to_string(),
                r.cost.to_string(),
                patch,
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Aligned plain-text table of the per-bug summary.
    pub fn summary_table(&self) -> String {
        let headers = [
            "Bug ID", "Plain", "EvoTests", "Fails", "Patches", "Contra.", "Remove", "Change",
            "Correct",
        ];
        let rows: Vec<Vec<String>> = self
            .summaries()
            .iter()
            .map(|s| {
                vec![
                    s.bug.clone(),
                    verdict_cell(s.plain_verdict),
                    format!("{:.1}", s.avg_generated),
                    format!("{:.1}", s.avg_fails),
                    format!("{:.1}", s.avg_adequate),
                    format!("{:.1}", s.avg_contradictions),
                    format!("{:.1}", s.avg_removals),
                    s.change_ratio(),
                    s.correct_ratio(),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
        for row in &rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = format!("mode: {}, seeds: {}\n", self.mode, self.seeds.len());
        let line = |cells: Vec<&str>, out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", padded.join("  ").trim_end());
        };
        line(headers.to_vec(), &mut out);
        for row in &rows {
            line(row.iter().map(String::as_str).collect(), &mut out);
        }
        out
    }
}
