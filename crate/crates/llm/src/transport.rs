//! Wire types, endpoint configuration and the HTTP transport.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_URL: &str = "PLAG_LLM_URL";
pub const ENV_TOKEN: &str = "PLAG_LLM_TOKEN";
pub const ENV_MODEL: &str = "PLAG_LLM_MODEL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    /// Transport or authentication failure; never retried.
    #[error("endpoint error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Endpoint { status: Option<u16>, message: String },
    #[error("quota exceeded{}", retry_after.map(|s| format!(", retry after {s}s")).unwrap_or_default())]
    QuotaExceeded { retry_after: Option<u64> },
    /// Server-side or network hiccup that may succeed on retry.
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("invalid prompt: {0}")]
    InvalidPrompt(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// Request body in the de facto chat-completion shape. Credentials travel
/// in a header and are never part of this struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

/// Sends one chat request and returns the assistant's text.
pub trait ChatTransport {
    fn send(&mut self, request: &ChatRequest) -> Result<String, LlmError>;
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    #[serde(skip)]
    pub token: Option<String>,
    pub auth_header: String,
    pub obfuscate_temperature: f64,
    pub generate_temperature: f64,
    /// Attempts per job when the reply holds no parseable program.
    pub max_attempts: u32,
    /// Extra tries per request after a transient failure.
    pub transient_retries: u32,
    /// Minimum spacing between requests.
    pub min_interval_ms: u64,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: String::new(),
            model: String::new(),
            token: None,
            auth_header: "Authorization".into(),
            obfuscate_temperature: 0.2,
            generate_temperature: 0.7,
            max_attempts: 3,
            transient_retries: 2,
            min_interval_ms: 0,
            timeout_secs: 120,
        }
    }
}

impl fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .field("auth_header", &self.auth_header)
            .field("obfuscate_temperature", &self.obfuscate_temperature)
            .field("generate_temperature", &self.generate_temperature)
            .field("max_attempts", &self.max_attempts)
            .field("transient_retries", &self.transient_retries)
            .field("min_interval_ms", &self.min_interval_ms)
            .field("timeout_secs", &self.timeout_secs)
            .finish()
    }
}

impl EndpointConfig {
    /// Reads URL, token and model from the environment.
    pub fn from_env() -> Result<Self, LlmError> {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let url = get(ENV_URL).ok_or_else(|| LlmError::Config(format!("{ENV_URL} is not set")))?;
        let model = get(ENV_MODEL).ok_or_else(|| LlmError::Config(format!("{ENV_MODEL} is not set")))?;
        Ok(EndpointConfig {
            url,
            model,
            token: get(ENV_TOKEN),
            ..Default::default()
        })
    }
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    config: EndpointConfig,
}

impl HttpTransport {
    pub fn new(config: EndpointConfig) -> Result<Self, LlmError> {
        if config.url.is_empty() {
            return Err(LlmError::Config("endpoint url is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpTransport { client, config })
    }
}

impl ChatTransport for HttpTransport {
    fn send(&mut self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut req = self.client.post(&self.config.url).json(request);
        if let Some(token) = &self.config.token {
            let value = if self.config.auth_header.eq_ignore_ascii_case("authorization") {
                format!("Bearer {token}")
            } else {
                token.clone()
            };
            req = req.header(self.config.auth_header.as_str(), value);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() || e.is_connect() {
                LlmError::Transient(e.to_string())
            } else {
                LlmError::Endpoint {
                    status: None,
                    message: e.to_string(),
                }
            }
        })?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse().ok());
        let body = resp.text().map_err(|e| LlmError::Transient(e.to_string()))?;
        classify(status, retry_after, &body)
    }
}

/// Maps an HTTP status and body to the assistant text or an error.
pub fn classify(status: u16, retry_after: Option<u64>, body: &str) -> Result<String, LlmError> {
    match status {
        200..=299 => {
            let parsed: ChatResponse =
                serde_json::from_str(body).map_err(|e| LlmError::Transient(format!("malformed response body: {e}")))?;
            parsed
                .choices
                .into_iter()
                .next()
                .map(|c| c.message.content)
                .ok_or_else(|| LlmError::Transient("response has no choices".into()))
        }
        429 => Err(LlmError::QuotaExceeded { retry_after }),
        500..=599 => Err(LlmError::Transient(format!("HTTP {status}"))),
        _ => Err(LlmError::Endpoint {
            status: Some(status),
            message: body.chars().take(200).collect(),
        }),
    }
}
