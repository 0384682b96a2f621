//! Prompt templates with `{code}` or `{assignment}` placeholders.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::transport::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    Obfuscate,
    Generate,
}

impl PromptMode {
    pub fn placeholder(self) -> &'static str {
        match self {
            PromptMode::Obfuscate => "{code}",
            PromptMode::Generate => "{assignment}",
        }
    }
}

pub const MAX_PROMPT_ID: u8 = 15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: u8,
    pub mode: PromptMode,
    pub text: String,
}

impl PromptTemplate {
    pub fn new(id: u8, mode: PromptMode, text: impl Into<String>) -> Result<Self, LlmError> {
        let t = PromptTemplate {
            id,
            mode,
            text: text.into(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(1..=MAX_PROMPT_ID).contains(&self.id) {
            return Err(LlmError::InvalidPrompt(format!(
                "prompt id {} outside 1..={MAX_PROMPT_ID}",
                self.id
            )));
        }
        if !self.text.contains(self.mode.placeholder()) {
            return Err(LlmError::InvalidPrompt(format!(
                "prompt {} lacks the {} placeholder",
                self.id,
                self.mode.placeholder()
            )));
        }
        Ok(())
    }

    pub fn render(&self, value: &str) -> String {
        self.text.replace(self.mode.placeholder(), value)
    }
}

/// Reads a JSON-lines prompt file, one template per line. Blank lines are
/// skipped.
pub fn load_prompts(path: &Path) -> Result<Vec<PromptTemplate>, LlmError> {
    let text = std::fs::read_to_string(path).map_err(|e| LlmError::Io(e.to_string()))?;
    parse_prompts(&text)
}

pub fn parse_prompts(text: &str) -> Result<Vec<PromptTemplate>, LlmError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: PromptTemplate =
            serde_json::from_str(line).map_err(|e| LlmError::InvalidPrompt(format!("line {}: {e}", i + 1)))?;
        t.validate()?;
        out.push(t);
    }
    Ok(out)
}
