//! Provider-agnostic chat-completion client for LLM-driven obfuscation and
//! generation attacks. Responses are validated by parsing the extracted
//! MiniLang code and, for obfuscation, by running the interpreter battery.
//!
//! No test in this crate touches the network: [`fixtures`] provides canned
//! transports.

pub mod audit;
pub mod extract;
pub mod fixtures;
pub mod jobs;
pub mod prompt;
pub mod transport;

pub use audit::{AuditLog, AuditRecord};
pub use extract::extract_code;
pub use jobs::{generate_via_llm, obfuscate_via_llm, JobOutcome, LlmClient, LlmJobResult};
pub use prompt::{load_prompts, PromptMode, PromptTemplate};
pub use transport::{ChatMessage, ChatRequest, ChatTransport, EndpointConfig, HttpTransport, LlmError};
