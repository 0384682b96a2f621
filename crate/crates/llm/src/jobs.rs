//! Obfuscation and generation jobs: request, extract, validate, retry.

use std::time::{Duration, Instant};

use plagguard_core::attacks::{check_equivalent, input_battery, AttackError};
use plagguard_core::Program;
use serde::{Deserialize, Serialize};

use crate::audit::{AuditLog, AuditRecord};
use crate::extract::extract_code;
use crate::prompt::{PromptMode, PromptTemplate};
use crate::transport::{ChatMessage, ChatRequest, ChatTransport, EndpointConfig, LlmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobOutcome {
    Valid,
    ParseFailed,
    /// Only produced when divergent replies are rejected; see
    /// [`LlmClient::reject_divergent`].
    BehaviorDivergent,
    /// Transient transport failures outlasted the retry budget.
    GaveUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmJobResult {
    pub job_id: String,
    pub prompt_id: u8,
    pub attempts: u32,
    pub outcome: JobOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program: Option<Program>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_note: Option<String>,
}

pub struct LlmClient<T> {
    transport: T,
    pub config: EndpointConfig,
    pub audit: AuditLog,
    /// Treat a parseable but behavior-changing reply as a failed attempt
    /// instead of a valid result.
    pub reject_divergent: bool,
    last_request: Option<Instant>,
}

impl<T: ChatTransport> LlmClient<T> {
    pub fn new(transport: T, config: EndpointConfig, audit: AuditLog) -> Self {
        LlmClient {
            transport,
            config,
            audit,
            reject_divergent: false,
            last_request: None,
        }
    }

    fn throttle(&mut self) {
        let gap = Duration::from_millis(self.config.min_interval_ms);
        if let Some(last) = self.last_request {
            let elapsed = last.elapsed();
            if elapsed < gap {
                std::thread::sleep(gap - elapsed);
            }
        }
        self.last_request = Some(Instant::now());
    }

    /// Sends one prompt, retrying transient failures. Every exchange is
    /// audited before it is returned.
    fn exchange(&mut self, job: &str, prompt_id: u8, attempt: u32, request: &ChatRequest) -> Result<String, LlmError> {
        let mut tries = 0;
        loop {
            self.throttle();
            let result = self.transport.send(request);
            self.audit.record(AuditRecord {
                job: job.to_string(),
                prompt_id,
                attempt,
                request: request.clone(),
                response: result.as_ref().ok().cloned(),
                error: result.as_ref().err().map(ToString::to_string),
            })?;
            match result {
                Err(LlmError::Transient(msg)) if tries < self.config.transient_retries => {
                    tries += 1;
                    log::warn!("{job}: transient failure ({msg}), retry {tries}");
                }
                other => return other,
            }
        }
    }

    fn request(&self, prompt: String, temperature: f64) -> ChatRequest {
        ChatRequest {
            model: self.config.model.clone(),
            messages: vec![ChatMessage::user(prompt)],
            temperature,
        }
    }
}

fn program_text(p: &Program) -> String {
    p.files.iter().map(|f| f.text.as_str()).collect::<Vec<_>>().join("\n")
}

fn check_mode(template: &PromptTemplate, mode: PromptMode) -> Result<(), LlmError> {
    template.validate()?;
    if template.mode != mode {
        return Err(LlmError::InvalidPrompt(format!(
            "prompt {} has mode {:?}, expected {mode:?}",
            template.id, template.mode
        )));
    }
    Ok(())
}

/// Asks the model to obfuscate `program`. A reply counts once its code
/// parses; behavior divergence on the interpreter battery is noted but does
/// not invalidate the result unless the client rejects divergent replies.
pub fn obfuscate_via_llm<T: ChatTransport>(
    client: &mut LlmClient<T>,
    program: &Program,
    template: &PromptTemplate,
    job_id: &str,
    battery_seed: u64,
) -> Result<LlmJobResult, LlmError> {
    check_mode(template, PromptMode::Obfuscate)?;
    let original = program
        .parse()
        .map_err(|e| LlmError::InvalidPrompt(format!("source program does not parse: {e}")))?;
    let battery = input_battery(battery_seed);
    let request = client.request(
        template.render(&program_text(program)),
        client.config.obfuscate_temperature,
    );
    let mut result = LlmJobResult {
        job_id: job_id.to_string(),
        prompt_id: template.id,
        attempts: 0,
        outcome: JobOutcome::ParseFailed,
        program: None,
        divergence_note: None,
    };
    for attempt in 1..=client.config.max_attempts.max(1) {
        result.attempts = attempt;
        let reply = match client.exchange(job_id, template.id, attempt, &request) {
            Ok(r) => r,
            Err(LlmError::Transient(_)) => {
                result.outcome = JobOutcome::GaveUp;
                return Ok(result);
            }
            Err(e) => return Err(e),
        };
        let Some(code) = extract_code(&reply) else {
            result.outcome = JobOutcome::ParseFailed;
            continue;
        };
        let candidate = Program::minilang(job_id, code);
        let Ok(ast) = candidate.parse() else {
            result.outcome = JobOutcome::ParseFailed;
            continue;
        };
        let note = match check_equivalent(&original, &ast, &battery) {
            Ok(()) => None,
            Err(AttackError::BehaviorChanged { input, .. }) => Some(format!("output differs on input {input:?}")),
            Err(e) => Some(e.to_string()),
        };
        if note.is_some() && client.reject_divergent {
            result.outcome = JobOutcome::BehaviorDivergent;
            result.divergence_note = note;
            continue;
        }
        result.outcome = JobOutcome::Valid;
        result.program = Some(candidate);
        result.divergence_note = note;
        return Ok(result);
    }
    Ok(result)
}

/// Requests `n` independent programs for an assignment. Job ids are
/// `<seed_tag>_p<prompt>_<index>`.
pub fn generate_via_llm<T: ChatTransport>(
    client: &mut LlmClient<T>,
    assignment: &str,
    template: &PromptTemplate,
    n: usize,
    seed_tag: &str,
) -> Result<Vec<LlmJobResult>, LlmError> {
    check_mode(template, PromptMode::Generate)?;
    let request = client.request(template.render(assignment), client.config.generate_temperature);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let job_id = format!("{seed_tag}_p{:02}_{i:03}", template.id);
        let mut result = LlmJobResult {
            job_id: job_id.clone(),
            prompt_id: template.id,
            attempts: 0,
            outcome: JobOutcome::ParseFailed,
            program: None,
            divergence_note: None,
        };
        for attempt in 1..=client.config.max_attempts.max(1) {
            result.attempts = attempt;
            let reply = match client.exchange(&job_id, template.id, attempt, &request) {
                Ok(r) => r,
                Err(LlmError::Transient(_)) => {
                    result.outcome = JobOutcome::GaveUp;
                    break;
                }
                Err(e) => return Err(e),
            };
            if let Some(code) = extract_code(&reply) {
                let candidate = Program::minilang(job_id.clone(), code);
                if candidate.parse().is_ok() {
                    result.outcome = JobOutcome::Valid;
                    result.program = Some(candidate);
                    break;
                }
            }
        }
        out.push(result);
    }
    Ok(out)
}
