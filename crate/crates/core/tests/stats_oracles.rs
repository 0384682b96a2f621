mod common;

use std::collections::BTreeSet;

use common::{cliffs_pairs, type7, wilcoxon_enumeration_p};
use plagguard_core::matcher::ComparisonResult;
use plagguard_core::stats::{
    cliffs_delta, delta_report, summarize, top_k_coverage, wilcoxon_one_sided, Interpretation, WilcoxonMethod,
    WilcoxonOptions,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Distinct, nonzero differences so the exact path applies.
fn tie_free_pair(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mags: Vec<f64> = Vec::new();
    while mags.len() < n {
        let m = rng.gen_range(1..1000) as f64 / 8.0;
        if !mags.contains(&m) {
            mags.push(m);
        }
    }
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
    let x = y
        .iter()
        .zip(&mags)
        .map(|(b, m)| if rng.gen_bool(0.6) { b + m } else { b - m })
        .collect();
    (x, y)
}

#[test]
fn exact_wilcoxon_matches_enumeration_up_to_12() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=12 {
        for _ in 0..25 {
            let (x, y) = tie_free_pair(&mut rng, n);
            let r = wilcoxon_one_sided(&x, &y, WilcoxonOptions::default()).unwrap();
            let (w, p) = wilcoxon_enumeration_p(&x, &y);
            assert_eq!(r.method, WilcoxonMethod::Exact);
            assert_eq!(r.n_effective, n);
            assert_eq!(r.w, w);
            assert!((r.p - p).abs() <= 1e-12, "n={n}: {} vs {p}", r.p);
        }
    }
}

#[test]
fn zero_differences_are_dropped_before_enumeration() {
    let x = [5.0, 3.0, 8.0, 1.0, 9.5, 4.0];
    let y = [5.0, 1.0, 2.0, 1.0, 3.0, 4.5];
    let r = wilcoxon_one_sided(&x, &y, WilcoxonOptions::default()).unwrap();
    let (w, p) = wilcoxon_enumeration_p(&x, &y);
    assert_eq!(r.n_effective, 4);
    assert_eq!(r.w, w);
    assert!((r.p - p).abs() <= 1e-12);
}

#[test]
fn five_strictly_greater_pairs() {
    let r = wilcoxon_one_sided(
        &[2.0, 3.0, 4.0, 5.0, 6.0],
        &[1.0, 1.5, 2.0, 0.0, 0.5],
        WilcoxonOptions::default(),
    )
    .unwrap();
    assert_eq!(r.w, 15.0);
    assert!((r.p - 0.03125).abs() <= 1e-15);
}

#[test]
fn cliffs_matches_pair_counting_up_to_200() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for _ in 0..60 {
        let m = rng.gen_range(1..=200);
        let n = rng.gen_range(1..=200);
        // Coarse values force plenty of ties.
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(0..40) as f64 * 2.5).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..40) as f64 * 2.5).collect();
        let r = cliffs_delta(&x, &y).unwrap();
        let (gt, lt, delta) = cliffs_pairs(&x, &y);
        assert_eq!((r.greater, r.less), (gt, lt));
        assert_eq!(r.delta, delta);
    }
}

#[test]
fn band_boundaries() {
    let cases = [
        (0.0, Interpretation::Negligible),
        (0.1469, Interpretation::Negligible),
        (0.147, Interpretation::Small),
        (0.2, Interpretation::Small),
        (0.3299, Interpretation::Small),
        (0.33, Interpretation::Medium),
        (0.4739, Interpretation::Medium),
        (0.474, Interpretation::Large),
        (0.5, Interpretation::Large),
        (0.6999, Interpretation::Large),
        (0.7, Interpretation::VeryLarge),
        (1.0, Interpretation::VeryLarge),
    ];
    for (v, want) in cases {
        assert_eq!(Interpretation::from_abs_delta(v), want, "|delta| = {v}");
    }
}

#[test]
fn summary_matches_reference_on_1000_uniform_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let v: Vec<f64> = (0..1000).map(|_| rng.gen_range(0.0..100.0)).collect();
    let s = summarize(&v).unwrap();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    assert!((s.mean - mean).abs() <= 1e-9);
    assert!((s.median - type7(&v, 0.5)).abs() <= 1e-9);
    assert!((s.q1 - type7(&v, 0.25)).abs() <= 1e-9);
    assert!((s.q3 - type7(&v, 0.75)).abs() <= 1e-9);
    assert_eq!(s.min, v.iter().cloned().fold(f64::INFINITY, f64::min));
    assert_eq!(s.max, v.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
}

#[test]
fn positive_iqr_gap_separates_three_quarters() {
    let plag = [70.0, 75.0, 80.0, 85.0, 90.0, 95.0, 40.0, 100.0];
    let orig = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 60.0, 2.0];
    let d = delta_report(&summarize(&plag).unwrap(), &summarize(&orig).unwrap());
    assert!(d.delta_iqr > 0.0);
    let po = summarize(&orig).unwrap();
    let pp = summarize(&plag).unwrap();
    let inside = |v: &[f64], lo: f64, hi: f64| v.iter().filter(|x| **x >= lo && **x <= hi).count();
    assert!(inside(&plag, po.q1, po.q3) * 4 < plag.len());
    assert!(inside(&orig, pp.q1, pp.q3) * 4 < orig.len());
}

fn result(a: &str, b: &str, sim: f64) -> ComparisonResult {
    ComparisonResult {
        id_a: a.into(),
        id_b: b.into(),
        matches: Vec::new(),
        len_seq_a: 0,
        len_seq_b: 0,
        similarity: sim,
        coverage_a: 0,
        coverage_b: 0,
        defenses: Vec::new(),
        warnings: Vec::new(),
    }
}

#[test]
fn top_k_on_constructed_ranking() {
    let flagged: BTreeSet<String> = (0..50).map(|i| format!("f{i:02}")).collect();
    let mut ranked = Vec::new();
    for i in 0..50 {
        for j in i + 1..50 {
            ranked.push(result(&format!("f{i:02}"), &format!("f{j:02}"), 90.0));
        }
    }
    for i in 0..30 {
        ranked.push(result(&format!("o{i:02}"), &format!("f{:02}", i % 50), 10.0));
    }
    assert_eq!(top_k_coverage(&ranked, &flagged, 1225), 1.0);
    assert_eq!(top_k_coverage(&ranked, &flagged, 0), 0.0);
    assert_eq!(top_k_coverage(&ranked, &flagged, ranked.len()), 1.0);
    assert_eq!(top_k_coverage(&ranked, &flagged, 1), 2.0 / 50.0);
}

proptest! {
    #[test]
    fn summary_is_permutation_invariant_and_ordered(v in prop::collection::vec(0.0f64..100.0, 1..60), seed in any::<u64>()) {
        let mut shuffled = v.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let s = summarize(&v).unwrap();
        prop_assert_eq!(s, summarize(&shuffled).unwrap());
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
    }

    #[test]
    fn cliffs_equals_pair_counting(
        x in prop::collection::vec(0u8..20, 1..40),
        y in prop::collection::vec(0u8..20, 1..40),
    ) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let r = cliffs_delta(&x, &y).unwrap();
        let (gt, lt, delta) = cliffs_pairs(&x, &y);
        prop_assert_eq!((r.greater, r.less, r.delta), (gt, lt, delta));
        prop_assert!(r.ci_low <= r.delta && r.delta <= r.ci_high);
        prop_assert!(r.ci_low >= -1.0 && r.ci_high <= 1.0);
        prop_assert_eq!(r.interpretation, Interpretation::from_abs_delta(r.delta.abs()));
    }

    #[test]
    fn bands_partition_the_unit_interval(v in 0.0f64..=1.0) {
        let labels = [
            (0.0, 0.147, Interpretation::Negligible),
            (0.147, 0.33, Interpretation::Small),
            (0.33, 0.474, Interpretation::Medium),
            (0.474, 0.7, Interpretation::Large),
            (0.7, f64::INFINITY, Interpretation::VeryLarge),
        ];
        let hits: Vec<_> = labels.iter().filter(|(lo, hi, _)| v >= *lo && v < *hi).collect();
        prop_assert_eq!(hits.len(), 1);
        prop_assert_eq!(Interpretation::from_abs_delta(v), hits[0].2);
    }

    #[test]
    fn wilcoxon_p_is_a_probability(
        pairs in prop::collection::vec((0u8..50, 0u8..50), 1..40),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let r = wilcoxon_one_sided(&x, &y, WilcoxonOptions::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.p));
        prop_assert!(r.w >= 0.0);
    }
}
