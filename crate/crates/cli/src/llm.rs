//! LLM attack runs: send the configured prompts, persist job results as
//! artifacts for the `llm_obf` and `llm_gen` stages.

use std::path::{Path, PathBuf};

use plagguard_core::Program;
use plagguard_llm::{
    generate_via_llm, obfuscate_via_llm, AuditLog, ChatTransport, EndpointConfig, LlmClient, LlmJobResult, PromptMode,
    PromptTemplate,
};
use serde::{Deserialize, Serialize};

use crate::config::{derive_seed, ExperimentConfig};
use crate::report::{read_jsonl, write_jsonl};
use crate::HarnessError;

pub const JOBS_FILE: &str = "jobs.jsonl";
pub const AUDIT_FILE: &str = "audit.jsonl";

/// One obfuscation job together with the original it was asked to rewrite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationJob {
    pub source_id: String,
    pub result: LlmJobResult,
}

pub fn obfuscate_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.llm_dir().join("obfuscate")
}

pub fn generate_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.llm_dir().join("generate")
}

fn client<T: ChatTransport>(
    cfg: &ExperimentConfig,
    transport: T,
    endpoint: EndpointConfig,
    dir: &Path,
) -> Result<LlmClient<T>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut client = LlmClient::new(transport, endpoint, AuditLog::to_file(&dir.join(AUDIT_FILE))?);
    client.reject_divergent = cfg.llm.reject_divergent;
    Ok(client)
}

fn templates_for(templates: &[PromptTemplate], mode: PromptMode) -> Result<Vec<&PromptTemplate>, HarnessError> {
    let selected: Vec<&PromptTemplate> = templates.iter().filter(|t| t.mode == mode).collect();
    if selected.is_empty() {
        return Err(HarnessError::Data(
            format!("no {mode:?} prompts in the prompt file").to_lowercase(),
        ));
    }
    Ok(selected)
}

/// Sends every obfuscation prompt for every selected original, in
/// (prompt, original) order, and writes `obfuscate/jobs.jsonl`.
pub fn run_obfuscation<T: ChatTransport>(
    cfg: &ExperimentConfig,
    transport: T,
    endpoint: EndpointConfig,
    templates: &[PromptTemplate],
    originals: &[Program],
) -> Result<Vec<ObfuscationJob>, HarnessError> {
    let templates = templates_for(templates, PromptMode::Obfuscate)?;
    let dir = obfuscate_dir(cfg);
    let mut client = client(cfg, transport, endpoint, &dir)?;
    let take = cfg.llm.programs.unwrap_or(originals.len()).min(originals.len());
    let mut jobs = Vec::new();
    for t in templates {
        for (i, p) in originals[..take].iter().enumerate() {
            let job_id = format!("obf_p{:02}_{}", t.id, p.id);
            let seed = derive_seed(cfg.seed, "llm_obf", i as u64);
            let result = obfuscate_via_llm(&mut client, p, t, &job_id, seed)?;
            log::info!("{job_id}: {:?} after {} attempt(s)", result.outcome, result.attempts);
            jobs.push(ObfuscationJob {
                source_id: p.id.clone(),
                result,
            });
        }
    }
    write_jsonl(&dir.join(JOBS_FILE), &jobs)?;
    Ok(jobs)
}

/// Requests `llm.n` programs per generation prompt and writes
/// `generate/jobs.jsonl`.
pub fn run_generation<T: ChatTransport>(
    cfg: &ExperimentConfig,
    transport: T,
    endpoint: EndpointConfig,
    templates: &[PromptTemplate],
) -> Result<Vec<LlmJobResult>, HarnessError> {
    let templates = templates_for(templates, PromptMode::Generate)?;
    if cfg.llm.assignment.trim().is_empty() {
        return Err(HarnessError::Config("llm.assignment is empty".into()));
    }
    let dir = generate_dir(cfg);
    let mut client = client(cfg, transport, endpoint, &dir)?;
    let mut jobs = Vec::new();
    for t in templates {
        jobs.extend(generate_via_llm(&mut client, &cfg.llm.assignment, t, cfg.llm.n, "gen")?);
    }
    write_jsonl(&dir.join(JOBS_FILE), &jobs)?;
    Ok(jobs)
}

pub fn read_obfuscation_jobs(cfg: &ExperimentConfig) -> Result<Vec<ObfuscationJob>, HarnessError> {
    read_artifact(&obfuscate_dir(cfg).join(JOBS_FILE), "obfuscate")
}

pub fn read_generation_jobs(cfg: &ExperimentConfig) -> Result<Vec<LlmJobResult>, HarnessError> {
    read_artifact(&generate_dir(cfg).join(JOBS_FILE), "generate")
}

fn read_artifact<T: serde::de::DeserializeOwned>(path: &Path, mode: &str) -> Result<Vec<T>, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifacts {
            what: format!("LLM job results at {}", path.display()),
            hint: format!("run `plagguard llm-attack --mode {mode}` with the same config first"),
        });
    }
    read_jsonl(path)
}
