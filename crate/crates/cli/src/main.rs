// SPDX-License-Identifier: Apache-2.0

//! `repairlab`: parse, run, generate tests, repair, classify and benchmark
//! programs written in the toy `.mrl` language.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use repairlab::experiment::{load_corpus, run_experiment, validate_corpus, ExperimentConfig, Mode};
use repairlab::gv::{enumerate_adequate_patches, GvConfig};
use repairlab::harness::{stabilize, TestSuite, DEFAULT_STABILIZE_ROUNDS};
use repairlab::lang::{evaluate, parse, print_program, ExecResult, Program, DEFAULT_STEP_LIMIT};
use repairlab::meta::{min_impact, unsat_guided, MetaConfig, MetaReport};
use repairlab::oracle::{classify, Point};
use repairlab::patch::Patch;
use repairlab::syn::{repair_syn, SynConfig, SynResult};
use repairlab::testgen::{generate_for_targets, GeneratorConfig, DEFAULT_TEST_COUNT};

#[derive(Parser)]
#[command(
    name = "repairlab",
    version,
    about = "Test-suite-based program repair playground"
)]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check a program, printing its canonical form.
    Parse {
        #[arg(long)]
        program: PathBuf,
    },
    /// Run one function on concrete arguments.
    Run {
        #[arg(long)]
        program: PathBuf,
        #[arg(long = "fn")]
        function: String,
        /// Comma-separated integers, e.g. `10,8` or `-3,4`.
        #[arg(long, allow_hyphen_values = true)]
        args: String,
        #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
        step_limit: u64,
    },
    /// Generate regression tests from the program's current behavior.
    GenTests {
        #[arg(long)]
        program: PathBuf,
        /// Target functions (repeat or comma-separate).
        #[arg(long = "target", alias = "fn", value_delimiter = ',', required = true)]
        functions: Vec<String>,
        #[arg(long = "n", default_value_t = DEFAULT_TEST_COUNT)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Consecutive identical runs required to keep a test.
        #[arg(long, default_value_t = DEFAULT_STABILIZE_ROUNDS)]
        rounds: usize,
        /// Output suite file; the suite is printed when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repair a program against a test suite with one engine.
    Repair {
        #[arg(long, value_enum)]
        engine: EngineArg,
        #[command(flatten)]
        input: RepairInput,
        /// Generate-and-validate search-order seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stop after this many adequate patches.
        #[arg(long)]
        max_patches: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick the adequate patch that breaks the fewest generated tests.
    Minimpact {
        #[command(flatten)]
        input: RepairInput,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grow the suite with generated tests that keep synthesis satisfiable.
    Unsatguided {
        #[command(flatten)]
        input: RepairInput,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify a patch against a reference by enumerating the domain.
    Classify {
        #[arg(long)]
        buggy: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        patch: PathBuf,
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
        step_limit: u64,
    },
    /// Run an experiment over a corpus and a seed set.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        /// Seeds as `a..b` (inclusive), a comma list, or a single value.
        #[arg(long, default_value = "1..30", value_parser = parse_seeds)]
        seeds: Seeds,
        /// Generate-and-validate budget in evaluations.
        #[arg(long, default_value_t = GvConfig::default().budget_evals)]
        gv_budget: u64,
        /// Synthesis budget in evaluations.
        #[arg(long, default_value_t = SynConfig::default().budget_evals)]
        syn_budget: u64,
        #[arg(long = "gen-n", default_value_t = DEFAULT_TEST_COUNT)]
        gen_count: usize,
        #[arg(long, default_value_t = 0)]
        engine_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check corpus invariants.
    ValidateCorpus {
        #[arg(long)]
        corpus: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Gv,
    Syn,
}

#[derive(Args)]
struct RepairInput {
    #[arg(long)]
    program: PathBuf,
    #[arg(long)]
    tests: PathBuf,
    /// Budget in deterministic evaluation units.
    #[arg(long)]
    budget_evals: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
    step_limit: u64,
}

#[derive(Args)]
struct GenArgs {
    /// Tests generated per target function.
    #[arg(long = "gen-n", default_value_t = DEFAULT_TEST_COUNT)]
    gen_count: usize,
    /// Test generator seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Generate-and-validate search-order seed.
    #[arg(long, default_value_t = 0)]
    engine_seed: u64,
}

#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let bad = || format!("invalid seed set `{s}` (expected a..b, a,b,c or a single integer)");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok(Seeds((a..=b).collect()));
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<Vec<u64>, String>>()
        .map(Seeds)
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn load_program(path: &Path) -> Result<Program> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&src).with_context(|| format!("in {}", path.display()))
}

fn load_suite(path: &Path) -> Result<TestSuite> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    TestSuite::parse(&src).with_context(|| format!("in {}", path.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn parse_args(s: &str) -> Result<Vec<i64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|a| {
            a.trim()
                .parse::<i64>()
                .with_context(|| format!("invalid argument `{a}`"))
        })
        .collect()
}

fn meta_config(input: &RepairInput, gen: &GenArgs) -> MetaConfig {
    let mut cfg = MetaConfig::default();
    if let Some(b) = input.budget_evals {
        cfg.gv.budget_evals = b;
        cfg.syn.budget_evals = b;
    }
    cfg.gv.seed = gen.engine_seed;
    cfg.gv.step_limit = input.step_limit;
    cfg.syn.step_limit = input.step_limit;
    cfg.gen = GeneratorConfig {
        seed: gen.seed,
        count: gen.gen_count,
        step_limit: input.step_limit,
        ..GeneratorConfig::default()
    };
    cfg
}

fn names(tests: &[repairlab::harness::TestCase]) -> String {
    tests
        .iter()
        .map(|t| t.name.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// `key=value` manifest; wall-clock timings are left out so reruns are
/// byte-identical.
fn report_manifest(algorithm: &str, r: &MetaReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "algorithm={algorithm}");
    let _ = writeln!(
        out,
        "result={}",
        if r.returned_patch.is_some() {
            "patched"
        } else {
            "none"
        }
    );
    if let Some(p) = &r.returned_patch {
        let _ = writeln!(out, "returned_ordinal={}", p.meta.ordinal);
    }
    let _ = writeln!(
        out,
        "changed={}",
        r.returned_patch.as_ref().map(Patch::edits_text)
            != r.initial_patch.as_ref().map(Patch::edits_text)
    );
    let _ = writeln!(out, "adequate_patches={}", r.adequate_patches);
    let _ = writeln!(out, "generated_tests={}", r.generated_tests);
    for (ordinal, n) in &r.fail_counts {
        let _ = writeln!(out, "fail_count.{ordinal}={n}");
    }
    let _ = writeln!(out, "kept_tests={}", names(&r.kept_tests));
    let _ = writeln!(out, "removed_tests={}", names(&r.removed_tests));
    let _ = writeln!(out, "contradiction_tests={}", names(&r.contradiction_tests));
    let _ = writeln!(out, "removed={}", r.removed_tests.len());
    let _ = writeln!(out, "contradictions={}", r.contradiction_tests.len());
    let _ = writeln!(out, "t_initial={}", r.t_initial);
    let _ = writeln!(out, "inner_budgets={}", join(&r.inner_budgets));
    let _ = writeln!(out, "engine_cost={}", r.engine_cost);
    out
}

fn write_meta_outputs(out: &Path, algorithm: &str, report: &MetaReport) -> Result<()> {
    if let Some(p) = &report.returned_patch {
        write(out, "patch.txt", &p.to_text())?;
        println!("{}", p.to_text().trim_end());
    } else {
        println!("no patch");
    }
    write(out, "report.txt", &report_manifest(algorithm, report))?;
    write(out, "suite.suite", &report.final_suite.to_text())
}

fn point(p: &Point) -> String {
    format!("({})", join(p))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Parse { program } => {
            print!("{}", print_program(&load_program(&program)?));
        }
        Command::Run {
            program,
            function,
            args,
            step_limit,
        } => {
            let p = load_program(&program)?;
            match evaluate(&p, &function, &parse_args(&args)?, step_limit)? {
                ExecResult::Returned(v) => println!("{v}"),
                ExecResult::StepLimitExceeded => bail!("step limit of {step_limit} exceeded"),
                ExecResult::RuntimeError(e) => bail!("runtime error: {e}"),
            }
        }
        Command::GenTests {
            program,
            functions,
            count,
            seed,
            rounds,
            out,
        } => {
            let p = load_program(&program)?;
            let cfg = GeneratorConfig {
                seed,
                count,
                ..GeneratorConfig::default()
            };
            let suite = generate_for_targets(&p, &functions, &cfg)?;
            let suite = stabilize(&p, &suite, rounds, cfg.step_limit);
            match out {
                Some(file) => {
                    if let Some(dir) = file.parent().filter(|d| !d.as_os_str().is_empty()) {
                        fs::create_dir_all(dir)
                            .with_context(|| format!("creating {}", dir.display()))?;
                    }
                    fs::write(&file, suite.to_text())
                        .with_context(|| format!("writing {}", file.display()))?;
                    println!("{} tests written to {}", suite.len(), file.display());
                }
                None => print!("{}", suite.to_text()),
            }
        }
        Command::Repair {
            engine,
            input,
            seed,
            max_patches,
            out,
        } => {
            let p = load_program(&input.program)?;
            let suite = load_suite(&input.tests)?;
            match engine {
                EngineArg::Gv => {
                    let mut cfg = GvConfig {
                        seed,
                        step_limit: input.step_limit,
                        max_patches: max_patches.unwrap_or(usize::MAX),
                        ..GvConfig::default()
                    };
                    if let Some(b) = input.budget_evals {
                        cfg.budget_evals = b;
                    }
                    let run = enumerate_adequate_patches(&p, &suite, &cfg)?;
                    for patch in &run.patches {
                        write(
                            &out,
                            &format!("patch-{:04}.txt", patch.meta.ordinal),
                            &patch.to_text(),
                        )?;
                    }
                    let manifest = format!(
                        "engine=gv\nresult={}\npatches={}\nevals={}\nexhausted={}\n",
                        if run.patches.is_empty() {
                            "none"
                        } else {
                            "patched"
                        },
                        run.patches.len(),
                        run.evals,
                        run.exhausted
                    );
                    write(&out, "manifest.txt", &manifest)?;
                    println!(
                        "{} adequate patch(es) in {} evaluations",
                        run.patches.len(),
                        run.evals
                    );
                }
                EngineArg::Syn => {
                    let mut cfg = SynConfig {
                        step_limit: input.step_limit,
                        ..SynConfig::default()
                    };
                    if let Some(b) = input.budget_evals {
                        cfg.budget_evals = b;
                    }
                    let run = repair_syn(&p, &suite, &cfg)?;
                    if let SynResult::Patched(patch) = &run.result {
                        write(&out, "patch.txt", &patch.to_text())?;
                        println!("{}", patch.to_text().trim_end());
                    }
                    let manifest = format!(
                        "engine=syn\nresult={}\ncost={}\n",
                        run.result.tag(),
                        run.cost
                    );
                    write(&out, "manifest.txt", &manifest)?;
                    println!("result={}", run.result.tag());
                }
            }
        }
        Command::Minimpact { input, gen, out } => {
            let p = load_program(&input.program)?;
            let suite = load_suite(&input.tests)?;
            let report = min_impact(&p, &suite, &meta_config(&input, &gen))?;
            write_meta_outputs(&out, "minimpact", &report)?;
        }
        Command::Unsatguided { input, gen, out } => {
            let p = load_program(&input.program)?;
            let suite = load_suite(&input.tests)?;
            let report = unsat_guided(&p, &suite, &meta_config(&input, &gen))?;
            write_meta_outputs(&out, "unsatguided", &report)?;
        }
        Command::Classify {
            buggy,
            reference,
            patch,
            function,
            step_limit,
        } => {
            let b = load_program(&buggy)?;
            let r = load_program(&reference)?;
            let text = fs::read_to_string(&patch)
                .with_context(|| format!("reading {}", patch.display()))?;
            let patch = Patch::parse(&text).with_context(|| format!("in {}", patch.display()))?;
            let c = classify(&b, &r, &patch, &function, step_limit)?;
            println!("verdict={}", c.verdict);
            println!("ibug={}", c.i_bug);
            println!("ipatch={}", c.i_patch);
            println!("fixed={}", c.fixed);
            println!("broken={}", c.broken);
            println!("points={}", c.total_points);
            for (label, pts) in [
                ("fixed", &c.witnesses.fixed),
                ("unfixed", &c.witnesses.unfixed),
                ("broken", &c.witnesses.broken),
            ] {
                if !pts.is_empty() {
                    println!(
                        "witness.{label}={}",
                        pts.iter().map(point).collect::<Vec<_>>().join(" ")
                    );
                }
            }
        }
        Command::Bench {
            corpus,
            mode,
            seeds,
            gv_budget,
            syn_budget,
            gen_count,
            engine_seed,
            out,
        } => {
            let bugs = load_corpus(&corpus)?;
            let cfg = ExperimentConfig {
                mode,
                seeds: seeds.0,
                gv_budget,
                syn_budget,
                gen_count,
                engine_seed,
                ..ExperimentConfig::default()
            };
            let report = run_experiment(&bugs, &cfg);
            write(&out, "report.csv", &report.report_csv())?;
            write(&out, "runs.csv", &report.runs_csv())?;
            print!("{}", report.summary_table());
        }
        Command::ValidateCorpus { corpus } => {
            let violations = validate_corpus(&corpus);
            if violations.is_empty() {
                println!("ok");
            } else {
                for v in &violations {
                    println!("{v}");
                }
                bail!("{} violation(s)", violations.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
