//! Behavior-preserving obfuscation attacks on MiniLang programs: dead-code
//! insertion (exhaustive and detector-guided) and refactoring. Every emitted
//! program is checked against its source on an interpreter input battery.

pub mod battery;
mod insertion;
mod refactor;
pub mod sites;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::FrontendError;
use crate::interp::Outcome;

pub use battery::{check_equivalent, input_battery};
pub use insertion::{insert_dead_exhaustive, insert_dead_threshold, ThresholdConfig};
pub use refactor::refactor_obfuscate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    InsertionExhaustive,
    InsertionThreshold,
    Refactoring,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefactorOp {
    SwapIfElse,
    ExtractExprVar,
    ExtractConstant,
    InsertDeadFunction,
    WrapInBlock,
}

impl RefactorOp {
    pub const ALL: [RefactorOp; 5] = [
        RefactorOp::SwapIfElse,
        RefactorOp::ExtractExprVar,
        RefactorOp::ExtractConstant,
        RefactorOp::InsertDeadFunction,
        RefactorOp::WrapInBlock,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            RefactorOp::SwapIfElse => "swap_if_else",
            RefactorOp::ExtractExprVar => "extract_expr_var",
            RefactorOp::ExtractConstant => "extract_constant",
            RefactorOp::InsertDeadFunction => "insert_dead_function",
            RefactorOp::WrapInBlock => "wrap_in_block",
        }
    }
}

impl std::str::FromStr for RefactorOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RefactorOp::ALL
            .into_iter()
            .find(|op| op.tag() == s)
            .ok_or_else(|| format!("unknown refactoring op `{s}`"))
    }
}

/// Statements the threshold attack may insert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionPool {
    /// Declarations of fresh, never-read variables only.
    #[default]
    PureDead,
    /// Dead declarations plus self-assignments of live variables.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationRecipe {
    pub kind: AttackKind,
    pub seed: u64,
    /// Number of refactoring operations; unused by insertion attacks.
    #[serde(default)]
    pub intensity: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub op_whitelist: Vec<RefactorOp>,
    #[serde(default)]
    pub pool: InsertionPool,
}

impl ObfuscationRecipe {
    pub fn exhaustive(seed: u64) -> Self {
        ObfuscationRecipe {
            kind: AttackKind::InsertionExhaustive,
            seed,
            intensity: 0,
            threshold: None,
            op_whitelist: Vec::new(),
            pool: InsertionPool::PureDead,
        }
    }

    pub fn refactoring(seed: u64, intensity: usize, ops: &[RefactorOp]) -> Self {
        ObfuscationRecipe {
            kind: AttackKind::Refactoring,
            seed,
            intensity,
            threshold: None,
            op_whitelist: ops.to_vec(),
            pool: InsertionPool::PureDead,
        }
    }

    pub fn threshold(seed: u64, threshold: f64, pool: InsertionPool) -> Self {
        ObfuscationRecipe {
            kind: AttackKind::InsertionThreshold,
            seed,
            intensity: 0,
            threshold: Some(threshold),
            op_whitelist: Vec::new(),
            pool,
        }
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if self.kind == AttackKind::InsertionThreshold {
            match self.threshold {
                Some(t) if t > 0.0 && t <= 100.0 => {}
                other => {
                    return Err(AttackError::InvalidRecipe(format!(
                        "threshold must be in (0, 100], got {other:?}"
                    )))
                }
            }
        }
        if self.kind == AttackKind::Refactoring && self.intensity > 0 && self.op_whitelist.is_empty() {
            return Err(AttackError::InvalidRecipe("refactoring needs at least one op".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackStatus {
    Completed,
    MaxItersExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackTrace {
    pub recipe: ObfuscationRecipe,
    pub status: AttackStatus,
    /// Proposals made (threshold mode) or operations attempted (refactoring).
    pub iterations: usize,
    /// Statement count of the output minus that of the input.
    pub inserted_statements: usize,
    /// Similarity after each accepted step, starting with the initial score.
    pub similarity_trajectory: Vec<f64>,
    pub applied_ops: Vec<RefactorOp>,
    pub skipped_ops: usize,
    /// Output line count as a percentage of the input line count.
    pub size_growth: f64,
    /// Number of detector comparisons performed.
    pub comparisons: usize,
    pub wall_time_secs: f64,
}

impl AttackTrace {
    fn new(recipe: &ObfuscationRecipe) -> Self {
        AttackTrace {
            recipe: recipe.clone(),
            status: AttackStatus::Completed,
            iterations: 0,
            inserted_statements: 0,
            similarity_trajectory: Vec::new(),
            applied_ops: Vec::new(),
            skipped_ops: 0,
            size_growth: 100.0,
            comparisons: 0,
            wall_time_secs: 0.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("obfuscated program behaves differently on input {input:?}")]
    BehaviorChanged {
        input: Vec<i64>,
        expected: Box<Outcome>,
        actual: Box<Outcome>,
    },
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
}

fn line_growth(before: &str, after: &str) -> f64 {
    let b = before.lines().count().max(1);
    100.0 * after.lines().count() as f64 / b as f64
}
