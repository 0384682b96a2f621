use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{check_finite, StatsError};
use crate::matcher::ComparisonResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Type-7 quantile (linear interpolation between order statistics) of
/// already sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<DistributionSummary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    check_finite(values)?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    // Summation over sorted values keeps the mean permutation-invariant.
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Ok(DistributionSummary {
        n: v.len(),
        mean,
        median: quantile(&v, 0.5),
        q1: quantile(&v, 0.25),
        q3: quantile(&v, 0.75),
        min: v[0],
        max: v[v.len() - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub delta_mean: f64,
    pub delta_median: f64,
    pub delta_iqr: f64,
}

/// Separation of plagiarism pairs from original pairs. `delta_iqr` is the
/// distance between the plagiarism Q1 and the original Q3.
pub fn delta_report(plag: &DistributionSummary, orig: &DistributionSummary) -> DeltaReport {
    DeltaReport {
        delta_mean: plag.mean - orig.mean,
        delta_median: plag.median - orig.median,
        delta_iqr: plag.q1 - orig.q3,
    }
}

/// Fraction of `flagged` programs that occur in at least one of the first `k`
/// results. `results` must already be ranked.
pub fn top_k_coverage(results: &[ComparisonResult], flagged: &BTreeSet<String>, k: usize) -> f64 {
    if flagged.is_empty() {
        return 0.0;
    }
    let mut seen = BTreeSet::new();
    for r in results.iter().take(k) {
        for id in [&r.id_a, &r.id_b] {
            if flagged.contains(id) {
                seen.insert(id.as_str());
            }
        }
    }
    seen.len() as f64 / flagged.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_summary() {
        let s = summarize(&[30.0, 10.0, 20.0]).unwrap();
        assert_eq!((s.median, s.mean, s.q1, s.q3), (20.0, 20.0, 15.0, 25.0));
        assert_eq!((s.min, s.max, s.n), (10.0, 30.0, 3));
    }

    #[test]
    fn singleton_and_empty() {
        let s = summarize(&[7.5]).unwrap();
        assert_eq!([s.mean, s.median, s.q1, s.q3, s.min, s.max], [7.5; 6]);
        assert_eq!(summarize(&[]), Err(StatsError::EmptyInput));
        assert_eq!(summarize(&[f64::NAN]), Err(StatsError::NonFinite));
    }

    #[test]
    fn delta_arithmetic() {
        let p = summarize(&[50.0, 60.0, 70.0]).unwrap();
        let o = summarize(&[10.0, 20.0, 30.0]).unwrap();
        let d = delta_report(&p, &o);
        assert_eq!((d.delta_median, d.delta_mean, d.delta_iqr), (40.0, 40.0, 30.0));
        let same = delta_report(&o, &o);
        assert_eq!(same.delta_median, 0.0);
        assert_eq!(same.delta_mean, 0.0);
        // Q1 minus Q3 of one distribution is its negated IQR, never zero.
        assert_eq!(same.delta_iqr, -(o.q3 - o.q1));
    }
}
