//! Experiment harness: corpus ingestion, evaluation stages, LLM attack runs
//! and report emission. The `plagguard` binary is a thin layer over this
//! crate.

pub mod config;
pub mod corpus;
pub mod llm;
pub mod report;
pub mod stages;

use std::path::{Path, PathBuf};

use plagguard_core::attacks::AttackError;
use plagguard_core::matcher::MatcherError;
use plagguard_core::FrontendError;
use plagguard_llm::LlmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate program id `{0}`")]
    DuplicateProgramId(String),
    #[error("no usable submissions in {}", .0.display())]
    EmptyCorpus(PathBuf),
    #[error("{0}")]
    Data(String),
    #[error("missing {what}: {hint}")]
    MissingArtifacts { what: String, hint: String },
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Matcher(#[from] MatcherError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Like [`HarnessError::io`], but a missing file becomes
    /// [`HarnessError::MissingArtifacts`].
    pub fn missing(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            HarnessError::MissingArtifacts {
                what: path.display().to_string(),
                hint: "run the step that produces it first (`plagguard evaluate` or `plagguard llm-attack`)".into(),
            }
        } else {
            HarnessError::io(path, source)
        }
    }

    /// Process exit code: 1 for usage errors, 2 for data errors, 3 for
    /// internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Internal(_) | HarnessError::Matcher(MatcherError::Pool(_)) => 3,
            HarnessError::Attack(AttackError::BehaviorChanged { .. }) => 3,
            _ => 2,
        }
    }
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Internal(format!("worker pool: {e}")))
}
