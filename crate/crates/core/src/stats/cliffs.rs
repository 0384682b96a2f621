use serde::{Deserialize, Serialize};

use super::{check_finite, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpretation {
    Negligible,
    Small,
    Medium,
    Large,
    #[serde(rename = "Very Large")]
    VeryLarge,
}

impl Interpretation {
    pub fn from_abs_delta(abs: f64) -> Self {
        match abs {
            a if a < 0.147 => Interpretation::Negligible,
            a if a < 0.33 => Interpretation::Small,
            a if a < 0.474 => Interpretation::Medium,
            a if a < 0.7 => Interpretation::Large,
            _ => Interpretation::VeryLarge,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Interpretation::Negligible => "Negligible",
            Interpretation::Small => "Small",
            Interpretation::Medium => "Medium",
            Interpretation::Large => "Large",
            Interpretation::VeryLarge => "Very Large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliffsDeltaResult {
    pub delta: f64,
    pub interpretation: Interpretation,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Pairs with x > y and with x < y.
    pub greater: u64,
    pub less: u64,
}

fn count_below(sorted: &[f64], v: f64) -> usize {
    sorted.partition_point(|s| *s < v)
}

fn count_above(sorted: &[f64], v: f64) -> usize {
    sorted.len() - sorted.partition_point(|s| *s <= v)
}

/// Cliff's delta of `x` over `y` with a 95% interval from the asymptotic
/// variance estimate, clamped to [-1, 1].
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<CliffsDeltaResult, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    check_finite(x)?;
    check_finite(y)?;
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len(), y.len());

    // Row dominance d_i. for each x_i, column dominance d_.j for each y_j.
    let row: Vec<i64> = x
        .iter()
        .map(|&v| count_below(&ys, v) as i64 - count_above(&ys, v) as i64)
        .collect();
    let col: Vec<i64> = y
        .iter()
        .map(|&v| count_above(&xs, v) as i64 - count_below(&xs, v) as i64)
        .collect();
    let greater: u64 = x.iter().map(|&v| count_below(&ys, v) as u64).sum();
    let less: u64 = x.iter().map(|&v| count_above(&ys, v) as u64).sum();
    let pairs = (n1 * n2) as f64;
    let delta = (greater as f64 - less as f64) / pairs;

    let (ci_low, ci_high) = if n1 < 2 || n2 < 2 {
        (-1.0, 1.0)
    } else {
        let (n1f, n2f) = (n1 as f64, n2 as f64);
        let ss_row: f64 = row.iter().map(|&r| (r as f64 / n2f - delta).powi(2)).sum();
        let ss_col: f64 = col.iter().map(|&c| (c as f64 / n1f - delta).powi(2)).sum();
        // Each d_ij is +-1 or 0, so the sum of squared deviations has a closed form.
        let ss_cell = (greater + less) as f64 - pairs * delta * delta;
        let var = (n2f * n2f * ss_row + n1f * n1f * ss_col - ss_cell) / (n1f * n2f * (n1f - 1.0) * (n2f - 1.0));
        let half = 1.96 * var.max(0.0).sqrt();
        ((delta - half).max(-1.0), (delta + half).min(1.0))
    };
    Ok(CliffsDeltaResult {
        delta,
        interpretation: Interpretation::from_abs_delta(delta.abs()),
        ci_low,
        ci_high,
        greater,
        less,
    })
}

/// Direct pair counting; reference for [`cliffs_delta`].
pub fn cliffs_delta_quadratic(x: &[f64], y: &[f64]) -> f64 {
    let mut gt = 0u64;
    let mut lt = 0u64;
    for a in x {
        for b in y {
            if a > b {
                gt += 1;
            } else if a < b {
                lt += 1;
            }
        }
    }
    (gt as f64 - lt as f64) / (x.len() * y.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_dominance() {
        let r = cliffs_delta(&[5.0, 6.0, 7.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.delta, 1.0);
        assert_eq!(r.interpretation, Interpretation::VeryLarge);
        assert_eq!(r.ci_high, 1.0);
    }

    #[test]
    fn same_multiset_is_negligible() {
        let v = [1.0, 2.0, 2.0, 3.0];
        let r = cliffs_delta(&v, &v).unwrap();
        assert_eq!(r.delta, 0.0);
        assert_eq!(r.interpretation, Interpretation::Negligible);
        assert!(r.ci_low < 0.0 && r.ci_high > 0.0);
    }

    #[test]
    fn band_boundaries() {
        use Interpretation::*;
        let cases = [
            (0.0, Negligible),
            (0.1469, Negligible),
            (0.147, Small),
            (0.2, Small),
            (0.33, Medium),
            (0.474, Large),
            (0.5, Large),
            (0.7, VeryLarge),
            (1.0, VeryLarge),
        ];
        for (d, want) in cases {
            assert_eq!(Interpretation::from_abs_delta(d), want, "{d}");
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(cliffs_delta(&[], &[1.0]), Err(StatsError::EmptyInput));
    }
}
