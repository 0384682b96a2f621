//! Evaluation stages. Every stage scores its pair categories under each
//! configured detector variant and writes a report tree below
//! `<output_dir>/reports/<stage>/`. Attack outputs go below
//! `<output_dir>/corpus/<stage>/`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use plagguard_core::attacks::{
    insert_dead_exhaustive, insert_dead_threshold, refactor_obfuscate, AttackError, AttackStatus, AttackTrace,
    InsertionPool, ObfuscationRecipe, ThresholdConfig,
};
use plagguard_core::matcher::{compare_prepared, prepare, MatcherError, Prepared};
use plagguard_core::stats::summarize;
use plagguard_core::token::EnrichedSequence;
use plagguard_core::{tokenize, Program};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{derive_seed, Category, ExperimentConfig, StageKind, Variant};
use crate::corpus::{load_originals, persist_corpus, Corpus, CorpusManifest, ManifestEntry, Role};
use crate::llm::{read_generation_jobs, read_obfuscation_jobs};
use crate::report::{
    box_plot_svg, build_report, emit_report, read_jsonl, write_jsonl, write_pairs, BoxGroup, PairRecord, StageReport,
    CSV_FILE, REPORT_FILE, SVG_FILE,
};
use crate::{thread_pool, write_file, HarnessError};

pub const RUNS_FILE: &str = "runs.jsonl";
pub const TRACES_FILE: &str = "traces.jsonl";

pub fn reports_dir(cfg: &ExperimentConfig, stage: StageKind) -> PathBuf {
    cfg.output_dir.join("reports").join(stage.name())
}

pub fn corpus_dir(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output_dir.join("corpus").join(name)
}

pub fn timings_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("timings").join("threshold_cost.json")
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageOutcome {
    Pairs(StageReport),
    Threshold(ThresholdReport),
}

/// Runs one stage on a worker pool of `jobs` threads.
pub fn run_stage(cfg: &ExperimentConfig, stage: StageKind, jobs: usize) -> Result<StageOutcome, HarnessError> {
    cfg.validate()?;
    write_file(&cfg.output_dir.join("config.toml"), &cfg.to_toml())?;
    thread_pool(jobs)?.install(|| {
        let originals = persisted_originals(cfg)?;
        let outcome = match stage {
            StageKind::Unrelated => StageOutcome::Pairs(unrelated(cfg, &originals)?),
            StageKind::Insertion => StageOutcome::Pairs(attack_stage(cfg, stage, &originals)?),
            StageKind::Refactoring => StageOutcome::Pairs(attack_stage(cfg, stage, &originals)?),
            StageKind::LlmObf => StageOutcome::Pairs(llm_obf(cfg, &originals)?),
            StageKind::LlmGen => StageOutcome::Pairs(llm_gen(cfg, &originals)?),
            StageKind::ThresholdCost => StageOutcome::Threshold(threshold_cost(cfg, &originals)?),
        };
        log::info!(
            "stage {} written to {}",
            stage.name(),
            reports_dir(cfg, stage).display()
        );
        Ok(outcome)
    })
}

/// Runs every stage listed in the config, in order.
pub fn run_all(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<(StageKind, StageOutcome)>, HarnessError> {
    cfg.stages
        .iter()
        .map(|&s| run_stage(cfg, s, jobs).map(|o| (s, o)))
        .collect()
}

/// Rebuilds a stage's statistics and renderings from its persisted records.
pub fn regenerate(cfg: &ExperimentConfig, stage: StageKind) -> Result<StageOutcome, HarnessError> {
    let dir = reports_dir(cfg, stage);
    if stage == StageKind::ThresholdCost {
        let runs: Vec<ThresholdRun> = read_jsonl(&dir.join(RUNS_FILE))?;
        let report = threshold_report(cfg.threshold_cost.threshold, &runs)?;
        emit_threshold_report(&dir, &report)?;
        Ok(StageOutcome::Threshold(report))
    } else {
        crate::report::regenerate(&dir, stage).map(StageOutcome::Pairs)
    }
}

fn persisted_originals(cfg: &ExperimentConfig) -> Result<Vec<Program>, HarnessError> {
    let corpus = load_originals(cfg)?;
    persist_corpus(&corpus, &corpus_dir(cfg, "originals"))?;
    Ok(corpus.programs)
}

type PairSpec = (String, String, Category);

fn op_pairs(originals: &[Program]) -> Vec<PairSpec> {
    let mut out = Vec::new();
    for (i, a) in originals.iter().enumerate() {
        for b in &originals[i + 1..] {
            out.push((a.id.clone(), b.id.clone(), Category::Op));
        }
    }
    out
}

/// Scores `pairs` over `programs` under every configured variant. Records
/// are ordered by variant, then by the order of `pairs`.
pub fn score_pairs(
    cfg: &ExperimentConfig,
    programs: &[Program],
    pairs: &[PairSpec],
) -> Result<Vec<PairRecord>, HarnessError> {
    let mut index = BTreeMap::new();
    for (i, p) in programs.iter().enumerate() {
        if index.insert(p.id.as_str(), i).is_some() {
            return Err(HarnessError::DuplicateProgramId(p.id.clone()));
        }
    }
    let wanted: BTreeSet<Category> = cfg.categories.iter().copied().collect();
    let pairs: Vec<(usize, usize, Category)> = pairs
        .iter()
        .filter(|(_, _, c)| wanted.contains(c))
        .map(|(a, b, c)| {
            let lookup = |id: &str| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| HarnessError::Internal(format!("pair references unknown program `{id}`")))
            };
            Ok((lookup(a)?, lookup(b)?, *c))
        })
        .collect::<Result<_, HarnessError>>()?;

    let enriched: Vec<EnrichedSequence> = programs
        .par_iter()
        .map(|p| {
            tokenize(p).map_err(|source| MatcherError::Frontend {
                id: p.id.clone(),
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    let variants = cfg.sorted_variants();
    let raw: Vec<Prepared> = enriched.par_iter().map(|e| prepare(e, false)).collect();
    let normalized: Vec<Prepared> = if variants.iter().any(|v| v.defenses(cfg.smm).tsn) {
        enriched.par_iter().map(|e| prepare(e, e.has_semantics())).collect()
    } else {
        Vec::new()
    };

    let mut records = Vec::with_capacity(variants.len() * pairs.len());
    for variant in variants {
        let defenses = variant.defenses(cfg.smm);
        let scored: Vec<PairRecord> = pairs
            .par_iter()
            .map(|&(i, j, category)| {
                let tsn = defenses.tsn && enriched[i].has_semantics() && enriched[j].has_semantics();
                let side = if tsn { &normalized } else { &raw };
                let r = compare_prepared(&side[i], &side[j], cfg.match_params, &defenses);
                PairRecord::from_result(variant, category, &r)
            })
            .collect();
        records.extend(scored);
    }
    Ok(records)
}

fn finish(cfg: &ExperimentConfig, stage: StageKind, records: &[PairRecord]) -> Result<StageReport, HarnessError> {
    let dir = reports_dir(cfg, stage);
    write_pairs(&dir, records)?;
    let report = build_report(stage, records)?;
    emit_report(&dir, &report, records)?;
    Ok(report)
}

fn unrelated(cfg: &ExperimentConfig, originals: &[Program]) -> Result<StageReport, HarnessError> {
    let records = score_pairs(cfg, originals, &op_pairs(originals))?;
    finish(cfg, StageKind::Unrelated, &records)
}

/// An attack output together with the original it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    pub source: String,
    pub trace: AttackTrace,
}

fn plagiarism_corpus(items: &[(Program, String, String)]) -> Corpus {
    Corpus {
        manifest: CorpusManifest {
            entries: items
                .iter()
                .map(|(p, source, provenance)| ManifestEntry {
                    id: p.id.clone(),
                    role: Role::Plagiarism { source: source.clone() },
                    provenance: Some(provenance.clone()),
                    path: String::new(),
                })
                .collect(),
            excluded: Vec::new(),
        },
        programs: items.iter().map(|(p, _, _)| p.clone()).collect(),
    }
}

/// Pairs every plagiarism with its source, next to the OP baseline.
fn p2s_stage(
    cfg: &ExperimentConfig,
    stage: StageKind,
    originals: &[Program],
    plagiarisms: &[(Program, String, String)],
) -> Result<StageReport, HarnessError> {
    let corpus = plagiarism_corpus(plagiarisms);
    let mut combined = CorpusManifest {
        entries: originals
            .iter()
            .map(|p| ManifestEntry {
                id: p.id.clone(),
                role: Role::Original,
                provenance: None,
                path: String::new(),
            })
            .collect(),
        excluded: Vec::new(),
    };
    combined.entries.extend(corpus.manifest.entries.iter().cloned());
    combined.validate()?;
    persist_corpus(&corpus, &corpus_dir(cfg, stage.name()))?;
    let mut pairs = op_pairs(originals);
    pairs.extend(
        plagiarisms
            .iter()
            .map(|(p, source, _)| (p.id.clone(), source.clone(), Category::P2s)),
    );
    let mut programs = originals.to_vec();
    programs.extend(plagiarisms.iter().map(|(p, _, _)| p.clone()));
    let records = score_pairs(cfg, &programs, &pairs)?;
    finish(cfg, stage, &records)
}

fn attack_stage(cfg: &ExperimentConfig, stage: StageKind, originals: &[Program]) -> Result<StageReport, HarnessError> {
    let (limit, suffix) = match stage {
        StageKind::Insertion => (cfg.insertion.programs, "ins"),
        StageKind::Refactoring => (cfg.refactoring.programs, "ref"),
        other => {
            return Err(HarnessError::Internal(format!(
                "{} is not an attack stage",
                other.name()
            )))
        }
    };
    let take = limit.unwrap_or(originals.len()).min(originals.len());
    let attacked: Vec<(Program, AttackTrace)> = originals[..take]
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let seed = derive_seed(cfg.seed, stage.name(), i as u64);
            let (mut out, mut trace) = match stage {
                StageKind::Insertion => insert_dead_exhaustive(p, seed)?,
                _ => refactor_obfuscate(
                    p,
                    &ObfuscationRecipe::refactoring(seed, cfg.refactoring.intensity, &cfg.refactoring.ops),
                )?,
            };
            out.id = format!("{}_{suffix}", p.id);
            trace.wall_time_secs = 0.0;
            Ok::<_, AttackError>((out, trace))
        })
        .collect::<Result<_, _>>()?;

    let traces: Vec<TraceRecord> = attacked
        .iter()
        .zip(originals)
        .map(|((out, trace), src)| TraceRecord {
            id: out.id.clone(),
            source: src.id.clone(),
            trace: trace.clone(),
        })
        .collect();
    write_jsonl(&corpus_dir(cfg, stage.name()).join(TRACES_FILE), &traces)?;
    let plagiarisms: Vec<(Program, String, String)> = attacked
        .into_iter()
        .zip(originals)
        .map(|((out, trace), src)| {
            let kind = serde_json::to_value(trace.recipe.kind).expect("kind serializes");
            let provenance = format!("{} seed {}", kind.as_str().unwrap_or_default(), trace.recipe.seed);
            (out, src.id.clone(), provenance)
        })
        .collect();
    p2s_stage(cfg, stage, originals, &plagiarisms)
}

fn llm_obf(cfg: &ExperimentConfig, originals: &[Program]) -> Result<StageReport, HarnessError> {
    let known: BTreeSet<&str> = originals.iter().map(|p| p.id.as_str()).collect();
    let mut plagiarisms = Vec::new();
    for job in read_obfuscation_jobs(cfg)? {
        if !known.contains(job.source_id.as_str()) {
            return Err(HarnessError::Data(format!(
                "LLM job `{}` rewrote `{}`, which is not in the corpus",
                job.result.job_id, job.source_id
            )));
        }
        if let Some(mut p) = job.result.program {
            p.id = job.result.job_id.clone();
            plagiarisms.push((p, job.source_id, format!("llm job {}", job.result.job_id)));
        }
    }
    if plagiarisms.is_empty() {
        return Err(HarnessError::Data("no valid LLM obfuscation results".into()));
    }
    p2s_stage(cfg, StageKind::LlmObf, originals, &plagiarisms)
}

/// FG pairs are formed among programs generated by the same prompt.
fn llm_gen(cfg: &ExperimentConfig, originals: &[Program]) -> Result<StageReport, HarnessError> {
    let mut by_prompt: BTreeMap<u8, Vec<Program>> = BTreeMap::new();
    for job in read_generation_jobs(cfg)? {
        if let Some(mut p) = job.program {
            p.id = job.job_id.clone();
            by_prompt.entry(job.prompt_id).or_default().push(p);
        }
    }
    let mut pairs = op_pairs(originals);
    let mut generated = Vec::new();
    for group in by_prompt.values() {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                pairs.push((a.id.clone(), b.id.clone(), Category::Fg));
            }
        }
        generated.extend(group.iter().cloned());
    }
    if pairs.iter().all(|(_, _, c)| *c != Category::Fg) {
        return Err(HarnessError::Data(
            "llm_gen needs at least two valid generated programs from one prompt".into(),
        ));
    }
    let corpus = Corpus {
        manifest: CorpusManifest {
            entries: generated
                .iter()
                .map(|p| ManifestEntry {
                    id: p.id.clone(),
                    role: Role::Generated,
                    provenance: Some(format!("llm job {}", p.id)),
                    path: String::new(),
                })
                .collect(),
            excluded: Vec::new(),
        },
        programs: generated.clone(),
    };
    persist_corpus(&corpus, &corpus_dir(cfg, StageKind::LlmGen.name()))?;
    let mut programs = originals.to_vec();
    programs.extend(generated);
    let records = score_pairs(cfg, &programs, &pairs)?;
    finish(cfg, StageKind::LlmGen, &records)
}

/// One threshold attack, as persisted in `runs.jsonl`. The trace's wall
/// time is zeroed; real times live in the timings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRun {
    pub program: String,
    pub target: Variant,
    pub pool: InsertionPool,
    pub max_iters: usize,
    pub trace: AttackTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAggregate {
    pub target: Variant,
    pub pool: InsertionPool,
    pub runs: usize,
    pub completed: usize,
    pub max_iters_exceeded: usize,
    pub median_inserted: f64,
    pub median_iterations: f64,
    pub median_comparisons: f64,
    pub median_size_growth: f64,
    pub median_final_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub stage: StageKind,
    pub threshold: f64,
    pub quartile_method: String,
    pub aggregates: Vec<ThresholdAggregate>,
}

impl ThresholdReport {
    pub fn aggregate(&self, target: Variant, pool: InsertionPool) -> Option<&ThresholdAggregate> {
        self.aggregates.iter().find(|a| a.target == target && a.pool == pool)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub program: String,
    pub target: Variant,
    pub pool: InsertionPool,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub target: Variant,
    pub pool: InsertionPool,
    pub median_wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub jobs: usize,
    pub runs: Vec<RunTiming>,
    pub medians: Vec<TimingSummary>,
}

fn median(values: &[f64]) -> Result<f64, HarnessError> {
    summarize(values)
        .map(|s| s.median)
        .map_err(|e| HarnessError::Data(e.to_string()))
}

fn groups<T>(items: &[T], key: impl Fn(&T) -> (Variant, InsertionPool)) -> Vec<((Variant, InsertionPool), Vec<&T>)> {
    let mut out: Vec<((Variant, InsertionPool), Vec<&T>)> = Vec::new();
    for item in items {
        let k = key(item);
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(item),
            None => out.push((k, vec![item])),
        }
    }
    out
}

pub fn threshold_report(threshold: f64, runs: &[ThresholdRun]) -> Result<ThresholdReport, HarnessError> {
    let mut aggregates = Vec::new();
    for ((target, pool), rs) in groups(runs, |r| (r.target, r.pool)) {
        let stat = |f: &dyn Fn(&ThresholdRun) -> f64| median(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
        let completed = rs.iter().filter(|r| r.trace.status == AttackStatus::Completed).count();
        aggregates.push(ThresholdAggregate {
            target,
            pool,
            runs: rs.len(),
            completed,
            max_iters_exceeded: rs.len() - completed,
            median_inserted: stat(&|r| r.trace.inserted_statements as f64)?,
            median_iterations: stat(&|r| r.trace.iterations as f64)?,
            median_comparisons: stat(&|r| r.trace.comparisons as f64)?,
            median_size_growth: stat(&|r| r.trace.size_growth)?,
            median_final_similarity: stat(&|r| r.trace.similarity_trajectory.last().copied().unwrap_or(100.0))?,
        });
    }
    Ok(ThresholdReport {
        stage: StageKind::ThresholdCost,
        threshold,
        quartile_method: "type-7".into(),
        aggregates,
    })
}

fn pool_name(pool: InsertionPool) -> &'static str {
    match pool {
        InsertionPool::PureDead => "pure_dead",
        InsertionPool::Mixed => "mixed",
    }
}

fn emit_threshold_report(dir: &Path, report: &ThresholdReport) -> Result<(), HarnessError> {
    let runs: Vec<ThresholdRun> = read_jsonl(&dir.join(RUNS_FILE))?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(&dir.join(REPORT_FILE), &(json + "\n"))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for a in &report.aggregates {
        w.serialize(a).map_err(|e| HarnessError::Internal(e.to_string()))?;
    }
    let csv =
        String::from_utf8(w.into_inner().map_err(|e| HarnessError::Internal(e.to_string()))?).expect("csv is utf-8");
    write_file(&dir.join(CSV_FILE), &csv)?;
    let boxes: Vec<BoxGroup> = groups(&runs, |r| (r.target, r.pool))
        .into_iter()
        .map(|((target, pool), rs)| BoxGroup {
            group: format!("{} ({})", target.label(), pool_name(pool)),
            series: "size growth".into(),
            values: rs.iter().map(|r| r.trace.size_growth).collect(),
        })
        .collect();
    let title = format!("threshold attack to {}%: output size", report.threshold);
    write_file(
        &dir.join(SVG_FILE),
        &box_plot_svg(&title, "size (% of original)", &boxes),
    )
}

fn threshold_cost(cfg: &ExperimentConfig, originals: &[Program]) -> Result<ThresholdReport, HarnessError> {
    let tc = &cfg.threshold_cost;
    let take = tc.programs.min(originals.len());
    let mut plan: Vec<(usize, Variant, InsertionPool, usize)> = Vec::new();
    for i in 0..take {
        for &target in &tc.targets {
            plan.push((i, target, tc.pool, tc.max_iters));
        }
        if tc.stall_iters > 0 {
            plan.push((i, Variant::Tsn, InsertionPool::PureDead, tc.stall_iters));
        }
    }
    let results: Vec<(ThresholdRun, Program, f64)> = plan
        .par_iter()
        .map(|&(i, target, pool, max_iters)| {
            let src = &originals[i];
            let recipe =
                ObfuscationRecipe::threshold(derive_seed(cfg.seed, "threshold_cost", i as u64), tc.threshold, pool);
            let tcfg = ThresholdConfig {
                defenses: target.defenses(cfg.smm),
                params: cfg.match_params,
                max_iters,
            };
            let (mut out, mut trace) = insert_dead_threshold(src, &recipe, &tcfg)?;
            out.id = format!("{}_thr_{}_{}", src.id, target.label().to_lowercase(), pool_name(pool));
            let secs = std::mem::take(&mut trace.wall_time_secs);
            let run = ThresholdRun {
                program: src.id.clone(),
                target,
                pool,
                max_iters,
                trace,
            };
            Ok::<_, AttackError>((run, out, secs))
        })
        .collect::<Result<_, _>>()?;

    let plagiarisms: Vec<(Program, String, String)> = results
        .iter()
        .map(|(run, out, _)| {
            let provenance = format!(
                "insertion_threshold seed {} target {}",
                run.trace.recipe.seed,
                run.target.label()
            );
            (out.clone(), run.program.clone(), provenance)
        })
        .collect();
    persist_corpus(
        &plagiarism_corpus(&plagiarisms),
        &corpus_dir(cfg, StageKind::ThresholdCost.name()),
    )?;

    let runs: Vec<ThresholdRun> = results.iter().map(|(r, _, _)| r.clone()).collect();
    let timing_runs: Vec<RunTiming> = results
        .iter()
        .map(|(r, _, secs)| RunTiming {
            program: r.program.clone(),
            target: r.target,
            pool: r.pool,
            wall_time_secs: *secs,
        })
        .collect();
    let medians = groups(&timing_runs, |t| (t.target, t.pool))
        .into_iter()
        .map(|((target, pool), ts)| {
            Ok(TimingSummary {
                target,
                pool,
                median_wall_time_secs: median(&ts.iter().map(|t| t.wall_time_secs).collect::<Vec<_>>())?,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    let timings = Timings {
        jobs: rayon::current_num_threads(),
        runs: timing_runs,
        medians,
    };
    let json = serde_json::to_string_pretty(&timings).expect("timings serialize");
    write_file(&timings_path(cfg), &(json + "\n"))?;

    let dir = reports_dir(cfg, StageKind::ThresholdCost);
    write_jsonl(&dir.join(RUNS_FILE), &runs)?;
    let report = threshold_report(tc.threshold, &runs)?;
    emit_threshold_report(&dir, &report)?;
    Ok(report)
}

pub fn read_timings(cfg: &ExperimentConfig) -> Result<Timings, HarnessError> {
    let path = timings_path(cfg);
    let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::missing(&path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}
