//! Evaluation statistics: distribution summaries, separation deltas, the
//! one-sided Wilcoxon signed-rank test, Cliff's delta and top-k coverage.

mod cliffs;
mod summary;
mod wilcoxon;

pub use cliffs::{cliffs_delta, cliffs_delta_quadratic, CliffsDeltaResult, Interpretation};
pub use summary::{delta_report, quantile, summarize, top_k_coverage, DeltaReport, DistributionSummary};
pub use wilcoxon::{wilcoxon_one_sided, WilcoxonMethod, WilcoxonOptions, WilcoxonResult};

use thiserror::Error;

/// Significance level for plagiarism-pair tests.
pub const ALPHA_PLAGIARISM: f64 = 0.01;
/// Significance level for generated-program tests.
pub const ALPHA_GENERATION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in input")]
    NonFinite,
}

fn check_finite(v: &[f64]) -> Result<(), StatsError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}
