use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_finite, StatsError};

/// Largest effective sample size for which the exact null distribution is
/// used (when there are no ties).
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
    /// Every difference was zero; no test was performed.
    AllZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonOptions {
    pub continuity_correction: bool,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        WilcoxonOptions {
            continuity_correction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences.
    pub w: f64,
    pub p: f64,
    pub n_effective: usize,
    pub method: WilcoxonMethod,
    pub continuity_correction: bool,
}

impl WilcoxonResult {
    pub fn all_zero_differences(&self) -> bool {
        self.method == WilcoxonMethod::AllZero
    }
}

/// Midranks of `values` (1-based), plus the sizes of tie groups.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// P(W+ >= w) under the null for untied ranks 1..=n, by counting subsets of
/// ranks per sum.
fn exact_upper_tail(n: usize, w: u64) -> f64 {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for r in 1..=n {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let tail: u64 = counts.iter().skip(w as usize).sum();
    tail as f64 / (1u64 << n) as f64
}

/// One-sided signed-rank test of `x - y` against the alternative that the
/// differences are shifted above zero.
pub fn wilcoxon_one_sided(x: &[f64], y: &[f64], opts: WilcoxonOptions) -> Result<WilcoxonResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    check_finite(x)?;
    check_finite(y)?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            w: 0.0,
            p: 1.0,
            n_effective: 0,
            method: WilcoxonMethod::AllZero,
            continuity_correction: opts.continuity_correction,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let w: f64 = ranks.iter().zip(&d).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();

    if ties.is_empty() && n <= EXACT_MAX_N {
        return Ok(WilcoxonResult {
            w,
            p: exact_upper_tail(n, w as u64),
            n_effective: n,
            method: WilcoxonMethod::Exact,
            continuity_correction: false,
        });
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let cc = if opts.continuity_correction { 0.5 } else { 0.0 };
    let z = (w - mean - cc) / var.sqrt();
    let normal = Normal::standard();
    Ok(WilcoxonResult {
        w,
        p: normal.sf(z).clamp(0.0, 1.0),
        n_effective: n,
        method: WilcoxonMethod::NormalApprox,
        continuity_correction: opts.continuity_correction,
    })
}
