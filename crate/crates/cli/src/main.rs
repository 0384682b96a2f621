use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use plagguard::config::{ExperimentConfig, StageKind};
use plagguard::corpus::{ingest_corpus, load_program, persist_corpus};
use plagguard::stages::{corpus_dir, regenerate, reports_dir, run_stage, StageOutcome};
use plagguard::{llm, HarnessError};
use plagguard_core::attacks::{
    insert_dead_exhaustive, insert_dead_threshold, refactor_obfuscate, InsertionPool, ObfuscationRecipe, RefactorOp,
    ThresholdConfig,
};
use plagguard_core::frontend::write_token_stream;
use plagguard_core::matcher::{compare, compare_corpus, DefenseConfig};
use plagguard_core::{tokenize, tsn};
use plagguard_llm::fixtures::{Fixture, FixtureTransport};
use plagguard_llm::{load_prompts, EndpointConfig, HttpTransport};

/// Token-based plagiarism detection with normalization and match-merging
/// defenses, obfuscation attacks and an evaluation harness.
#[derive(Parser)]
#[command(name = "plagguard", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true)]
    min_match_len: Option<usize>,
    /// Enable token sequence normalization.
    #[arg(long, global = true)]
    tsn: bool,
    /// Enable subsequence match merging.
    #[arg(long, global = true)]
    smm: bool,
    #[arg(long, global = true)]
    smm_max_gap: Option<usize>,
    #[arg(long, global = true)]
    smm_min_neighbor: Option<usize>,
    /// Overrides the config's output directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Parse-filter a submission directory and write its manifest.
    Ingest {
        dir: PathBuf,
        /// Destination; defaults to `<output_dir>/corpus/originals`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the token sequence of a program.
    Tokenize { path: PathBuf },
    /// Compare two programs and print the result as a JSON line.
    Compare { a: PathBuf, b: PathBuf },
    /// Compare all pairs of a submission directory, most similar first.
    Detect {
        dir: PathBuf,
        /// Only print the top K pairs.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Print the normalized token sequence of a program.
    Normalize {
        path: PathBuf,
        /// Print the token normalization graph after dead-node removal.
        #[arg(long)]
        dump_graph: bool,
    },
    /// Run an obfuscation attack on one program.
    Obfuscate {
        path: PathBuf,
        #[arg(long, value_enum)]
        kind: AttackArg,
        #[arg(long)]
        out: PathBuf,
        /// Refactoring operations to apply.
        #[arg(long, default_value_t = 30)]
        intensity: usize,
        /// Comma-separated refactoring ops; defaults to all.
        #[arg(long, value_delimiter = ',')]
        ops: Vec<RefactorOp>,
        /// Target similarity of the threshold attack.
        #[arg(long, default_value_t = 25.0)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = PoolArg::Mixed)]
        pool: PoolArg,
        #[arg(long, default_value_t = 1500)]
        max_iters: usize,
    },
    /// Run LLM obfuscation or generation jobs and store their results.
    LlmAttack {
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Prompt file (JSON lines); defaults to `llm.prompts` of the config.
        #[arg(long)]
        prompts: Option<PathBuf>,
        /// Programs per generation prompt.
        #[arg(long)]
        n: Option<usize>,
        /// Answer from an offline fixture instead of the endpoint.
        #[arg(long, value_enum)]
        fixture: Option<FixtureArg>,
    },
    /// Run evaluation stages.
    Evaluate {
        #[arg(long, value_enum, required_unless_present = "all", conflicts_with = "all")]
        stage: Option<StageKind>,
        /// Run every stage listed in the config.
        #[arg(long)]
        all: bool,
    },
    /// Rebuild a stage's report files from its persisted records.
    Report {
        #[arg(long, value_enum)]
        stage: StageKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    Exhaustive,
    Refactoring,
    Threshold,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolArg {
    PureDead,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Obfuscate,
    Generate,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureArg {
    Echo,
    Rename,
    Prose,
}

impl Global {
    fn experiment(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(m) = self.min_match_len {
            cfg.match_params.min_match_len = m;
        }
        if let Some(g) = self.smm_max_gap {
            cfg.smm.max_gap = g;
        }
        if let Some(n) = self.smm_min_neighbor {
            cfg.smm.min_neighbor_len = n;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn defenses(&self, cfg: &ExperimentConfig) -> DefenseConfig {
        DefenseConfig {
            tsn: self.tsn,
            smm: self.smm,
            smm_params: cfg.smm,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<HarnessError>())
                .map_or(2, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let cfg = g.experiment()?;
    match cli.command {
        Command::Ingest { dir, out } => {
            let corpus = ingest_corpus(&dir)?;
            let out = out.unwrap_or_else(|| corpus_dir(&cfg, "originals"));
            let manifest = persist_corpus(&corpus, &out)?;
            println!(
                "{} programs, {} excluded, manifest at {}",
                manifest.entries.len(),
                manifest.excluded.len(),
                out.join("manifest.json").display()
            );
        }
        Command::Tokenize { path } => {
            let seq = tokenize(&load_program(&path)?).map_err(HarnessError::from)?;
            print!("{}", write_token_stream(&seq.sequence));
        }
        Command::Compare { a, b } => {
            let (a, b) = (load_program(&a)?, load_program(&b)?);
            let r = compare(&a, &b, cfg.match_params, &g.defenses(&cfg)).map_err(HarnessError::from)?;
            println!("{}", r.to_json_line());
        }
        Command::Detect { dir, top } => {
            let corpus = ingest_corpus(&dir)?;
            let mut results = compare_corpus(&corpus.programs, cfg.match_params, &g.defenses(&cfg), g.jobs)
                .map_err(HarnessError::from)?;
            results.sort_by(|x, y| {
                y.similarity
                    .total_cmp(&x.similarity)
                    .then_with(|| (&x.id_a, &x.id_b).cmp(&(&y.id_a, &y.id_b)))
            });
            for r in results.iter().take(top.unwrap_or(usize::MAX)) {
                println!("{}", r.to_json_line());
            }
        }
        Command::Normalize { path, dump_graph } => {
            let enriched = tokenize(&load_program(&path)?).map_err(HarnessError::from)?;
            if dump_graph {
                let graph = tsn::build_tng(&enriched).context("building the normalization graph")?;
                print!("{}", tsn::remove_dead_nodes(&graph).to_text());
            } else {
                let seq = tsn::normalize(&enriched).context("normalizing")?;
                print!("{}", write_token_stream(&seq));
            }
        }
        Command::Obfuscate {
            path,
            kind,
            out,
            intensity,
            ops,
            threshold,
            pool,
            max_iters,
        } => {
            let program = load_program(&path)?;
            let seed = cfg.seed;
            let (result, trace) = match kind {
                AttackArg::Exhaustive => insert_dead_exhaustive(&program, seed),
                AttackArg::Refactoring => {
                    let ops = if ops.is_empty() { RefactorOp::ALL.to_vec() } else { ops };
                    refactor_obfuscate(&program, &ObfuscationRecipe::refactoring(seed, intensity, &ops))
                }
                AttackArg::Threshold => {
                    let pool = match pool {
                        PoolArg::PureDead => InsertionPool::PureDead,
                        PoolArg::Mixed => InsertionPool::Mixed,
                    };
                    let tcfg = ThresholdConfig {
                        defenses: g.defenses(&cfg),
                        params: cfg.match_params,
                        max_iters,
                    };
                    insert_dead_threshold(&program, &ObfuscationRecipe::threshold(seed, threshold, pool), &tcfg)
                }
            }
            .map_err(HarnessError::from)?;
            write_program(&out, &result)?;
            let json = serde_json::to_string_pretty(&trace)?;
            plagguard::write_file(&out.join("trace.json"), &(json + "\n"))?;
            println!(
                "{:?} after {} iterations; output in {}",
                trace.status,
                trace.iterations,
                out.display()
            );
        }
        Command::LlmAttack {
            mode,
            prompts,
            n,
            fixture,
        } => {
            let mut cfg = cfg;
            if let Some(n) = n {
                cfg.llm.n = n;
            }
            let Some(prompt_path) = prompts.or_else(|| cfg.llm.prompts.clone()) else {
                bail!(HarnessError::Config(
                    "no prompt file: pass --prompts or set llm.prompts".into()
                ));
            };
            let templates = load_prompts(&prompt_path).map_err(HarnessError::from)?;
            let originals = plagguard::corpus::load_originals(&cfg)?.programs;
            let count = match fixture {
                Some(f) => {
                    let f = match f {
                        FixtureArg::Echo => Fixture::Echo,
                        FixtureArg::Rename => Fixture::Rename,
                        FixtureArg::Prose => Fixture::Prose,
                    };
                    llm_run(
                        &cfg,
                        mode,
                        FixtureTransport::new(f),
                        EndpointConfig::default(),
                        &templates,
                        &originals,
                    )?
                }
                None => {
                    let endpoint = EndpointConfig::from_env().map_err(HarnessError::from)?;
                    let transport = HttpTransport::new(endpoint.clone()).map_err(HarnessError::from)?;
                    llm_run(&cfg, mode, transport, endpoint, &templates, &originals)?
                }
            };
            println!("{count} valid results in {}", cfg.llm_dir().display());
        }
        Command::Evaluate { stage, all } => {
            let stages = if all {
                cfg.stages.clone()
            } else {
                stage.into_iter().collect()
            };
            for s in stages {
                let outcome = run_stage(&cfg, s, g.jobs)?;
                print_outcome(s, &outcome, &reports_dir(&cfg, s));
            }
        }
        Command::Report { stage } => {
            let outcome = regenerate(&cfg, stage)?;
            print_outcome(stage, &outcome, &reports_dir(&cfg, stage));
        }
    }
    Ok(())
}

fn llm_run<T: plagguard_llm::ChatTransport>(
    cfg: &ExperimentConfig,
    mode: ModeArg,
    transport: T,
    endpoint: EndpointConfig,
    templates: &[plagguard_llm::PromptTemplate],
    originals: &[plagguard_core::Program],
) -> Result<usize, HarnessError> {
    Ok(match mode {
        ModeArg::Obfuscate => llm::run_obfuscation(cfg, transport, endpoint, templates, originals)?
            .iter()
            .filter(|j| j.result.program.is_some())
            .count(),
        ModeArg::Generate => llm::run_generation(cfg, transport, endpoint, templates)?
            .iter()
            .filter(|j| j.program.is_some())
            .count(),
    })
}

fn write_program(dir: &Path, program: &plagguard_core::Program) -> Result<(), HarnessError> {
    for f in &program.files {
        plagguard::write_file(&dir.join(&f.path), &f.text)?;
    }
    Ok(())
}

fn print_outcome(stage: StageKind, outcome: &StageOutcome, dir: &Path) {
    println!("{} -> {}", stage.name(), dir.display());
    match outcome {
        StageOutcome::Pairs(report) => {
            for r in &report.rows {
                let delta = r
                    .deltas
                    .map(|d| format!("  dmedian {:+.2}", d.delta_median))
                    .unwrap_or_default();
                println!(
                    "  {:<5} {:<4} n={:<4} median {:6.2}{delta}",
                    r.variant.label(),
                    r.pairs.label(),
                    r.summary.n,
                    r.summary.median
                );
            }
        }
        StageOutcome::Threshold(report) => {
            for a in &report.aggregates {
                println!(
                    "  {:<5} {:?}: {}/{} completed, median inserted {}, median size {:.0}%",
                    a.target.label(),
                    a.pool,
                    a.completed,
                    a.runs,
                    a.median_inserted,
                    a.median_size_growth
                );
            }
        }
    }
}
