use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use plagguard::config::{Category, ExperimentConfig, StageKind, Variant};
use plagguard::corpus::{ingest_corpus, load_originals, Role};
use plagguard::report::{parse_csv, read_pairs, CSV_FILE, REPORT_FILE, SVG_FILE};
use plagguard::stages::{regenerate, reports_dir, run_stage, StageOutcome};
use plagguard::HarnessError;
use plagguard_core::generator::{generate_program, GeneratorConfig};

fn small() -> GeneratorConfig {
    GeneratorConfig {
        min_statements: 12,
        max_statements: 30,
        max_depth: 2,
        ..GeneratorConfig::default()
    }
}

fn config(dir: &Path, programs: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        output_dir: dir.to_path_buf(),
        seed: 5,
        ..ExperimentConfig::default()
    };
    cfg.corpus.programs = programs;
    cfg.corpus.generator = small();
    cfg.threshold_cost.programs = 2;
    cfg.threshold_cost.max_iters = 300;
    cfg.threshold_cost.stall_iters = 30;
    cfg
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn submissions(dir: &Path, valid: usize) {
    for i in 0..valid {
        let p = generate_program(format!("s{i:02}"), i as u64, &small());
        std::fs::write(dir.join(format!("s{i:02}.ml")), &p.files[0].text).unwrap();
    }
}

#[test]
fn ingest_excludes_unparseable_submissions_without_touching_the_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("subs");
    std::fs::create_dir(&src).unwrap();
    submissions(&src, 10);
    std::fs::write(src.join("broken1.ml"), "fn main() { int x = ; }").unwrap();
    std::fs::write(src.join("broken2.ml"), "this is not code").unwrap();
    std::fs::write(src.join("notes.txt"), "ignored").unwrap();
    let before = files(&src);

    let corpus = ingest_corpus(&src).unwrap();
    assert_eq!(corpus.manifest.entries.len(), 10);
    let excluded: Vec<&str> = corpus.manifest.excluded.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(excluded, ["broken1", "broken2"]);
    assert!(corpus.manifest.entries.iter().all(|e| e.role == Role::Original));
    let ids: Vec<&str> = corpus.manifest.entries.iter().map(|e| e.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert_eq!(files(&src), before);
}

#[test]
fn duplicate_submission_names_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    submissions(tmp.path(), 2);
    std::fs::create_dir(tmp.path().join("s01")).unwrap();
    std::fs::copy(tmp.path().join("s01.ml"), tmp.path().join("s01").join("main.ml")).unwrap();
    match ingest_corpus(tmp.path()) {
        Err(HarnessError::DuplicateProgramId(id)) => assert_eq!(id, "s01"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn empty_directory_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.ml"), "nope").unwrap();
    assert!(matches!(ingest_corpus(tmp.path()), Err(HarnessError::EmptyCorpus(_))));
}

#[test]
fn generated_corpus_has_only_originals() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = load_originals(&config(tmp.path(), 30)).unwrap();
    assert_eq!(corpus.manifest.originals().count(), 30);
    assert_eq!(corpus.manifest.entries.len(), 30);
}

#[test]
fn unrelated_stage_on_27_programs_yields_351_pairs_per_variant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 27);
    let StageOutcome::Pairs(report) = run_stage(&cfg, StageKind::Unrelated, 2).unwrap() else {
        panic!("pair stage expected");
    };
    assert_eq!(report.rows.len(), 4);
    for row in &report.rows {
        assert_eq!(row.summary.n, 351);
        assert_eq!(row.pairs, Category::Op);
    }
}

#[test]
fn insertion_stage_scores_each_plagiarism_and_the_op_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path(), 24);
    cfg.insertion.programs = Some(20);
    cfg.variants = vec![Variant::Base, Variant::Tsn];
    run_stage(&cfg, StageKind::Insertion, 1).unwrap();
    let records = read_pairs(&reports_dir(&cfg, StageKind::Insertion)).unwrap();
    for v in [Variant::Base, Variant::Tsn] {
        let count = |c| records.iter().filter(|r| r.variant == v && r.pairs == c).count();
        assert_eq!(count(Category::P2s), 20);
        assert_eq!(count(Category::Op), 24 * 23 / 2);
    }
    let manifest = std::fs::read_to_string(tmp.path().join("corpus/insertion/manifest.json")).unwrap();
    assert_eq!(manifest.matches("\"role\": \"plagiarism\"").count(), 20);
}

#[test]
fn reruns_are_byte_identical_and_reports_regenerate_from_records() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: usize| {
        let cfg = config(&tmp.path().join(name), 8);
        for stage in [StageKind::Unrelated, StageKind::Refactoring, StageKind::ThresholdCost] {
            run_stage(&cfg, stage, jobs).unwrap();
        }
        cfg
    };
    let a = run("a", 1);
    let b = run("b", 3);
    let reports = files(&a.output_dir.join("reports"));
    assert_eq!(reports, files(&b.output_dir.join("reports")));
    assert_eq!(files(&a.output_dir.join("corpus")), files(&b.output_dir.join("corpus")));

    for stage in [StageKind::Refactoring, StageKind::ThresholdCost] {
        let dir = reports_dir(&a, stage);
        for f in [REPORT_FILE, CSV_FILE, SVG_FILE] {
            std::fs::remove_file(dir.join(f)).unwrap();
        }
        regenerate(&a, stage).unwrap();
    }
    assert_eq!(files(&a.output_dir.join("reports")), reports);
}

#[test]
fn summary_csv_is_consistent_with_its_own_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 10);
    run_stage(&cfg, StageKind::Refactoring, 1).unwrap();
    let dir = reports_dir(&cfg, StageKind::Refactoring);
    let rows = parse_csv(&std::fs::read_to_string(dir.join(CSV_FILE)).unwrap()).unwrap();
    assert_eq!(rows.len(), 8);
    for r in rows.iter().filter(|r| r.pairs == "P2S") {
        let op = rows.iter().find(|o| o.variant == r.variant && o.pairs == "OP").unwrap();
        assert_eq!(r.delta_iqr, Some(r.q1 - op.q3));
        assert_eq!(r.delta_median, Some(r.median - op.median));
    }
    let svg = std::fs::read_to_string(dir.join(SVG_FILE)).unwrap();
    assert!(svg.contains("whiskers: 1.5 IQR"));
}

#[test]
fn llm_stages_without_artifacts_name_the_missing_step() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 4);
    for stage in [StageKind::LlmObf, StageKind::LlmGen] {
        match run_stage(&cfg, stage, 1) {
            Err(e @ HarnessError::MissingArtifacts { .. }) => {
                assert!(e.to_string().contains("llm-attack"));
                assert_eq!(e.exit_code(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

fn cli(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_plagguard"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes_and_compare_output() {
    let tmp = tempfile::tempdir().unwrap();
    submissions(tmp.path(), 3);
    let out = cli(&["compare", "s00.ml", "s00.ml", "--tsn", "--smm"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let line: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(line["similarity"], 100.0);
    assert_eq!(line["defenses"], serde_json::json!(["tsn", "smm"]));

    assert_eq!(cli(&["compare", "s00.ml"], tmp.path()).status.code(), Some(1));
    assert_eq!(cli(&["frobnicate"], tmp.path()).status.code(), Some(1));
    assert_eq!(
        cli(&["compare", "s00.ml", "missing.ml"], tmp.path()).status.code(),
        Some(2)
    );
    assert_eq!(cli(&["--help"], tmp.path()).status.code(), Some(0));

    let out = cli(&["detect", ".", "--top", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}

#[test]
fn cli_obfuscate_writes_program_and_trace() {
    let tmp = tempfile::tempdir().unwrap();
    submissions(tmp.path(), 1);
    let out = cli(
        &[
            "obfuscate",
            "s00.ml",
            "--kind",
            "refactoring",
            "--intensity",
            "5",
            "--out",
            "ref",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("ref/s00.ml").exists());
    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("ref/trace.json")).unwrap()).unwrap();
    assert_eq!(trace["recipe"]["kind"], "refactoring");
}
