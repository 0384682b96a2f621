mod common;

use common::{small_programs, smm_oracle, symbols_to_seq};
use plagguard_core::attacks::{refactor_obfuscate, ObfuscationRecipe, RefactorOp};
use plagguard_core::generator::generate_program;
use plagguard_core::matcher::{compare, compare_sequences, DefenseConfig, Match, MatchParams};
use plagguard_core::smm::{merge_once, merge_to_fixpoint, SmmParams};
use proptest::prelude::*;

fn spans(ms: &[Match]) -> Vec<(usize, usize, usize, usize)> {
    let mut v: Vec<_> = ms.iter().map(|m| (m.start_a, m.start_b, m.len_a, m.len_b)).collect();
    v.sort();
    v
}

/// Disjoint matches laid out left to right in `a` and in the order `perm`
/// in `b`, with the given lengths and gaps.
fn layout(lens: &[usize], gaps_a: &[usize], gaps_b: &[usize], perm: &[usize]) -> Vec<Match> {
    let mut out: Vec<Match> = Vec::new();
    let mut pos_a = 0;
    for (k, &len) in lens.iter().enumerate() {
        pos_a += gaps_a[k];
        out.push(Match::raw(pos_a, 0, len));
        pos_a += len;
    }
    let mut pos_b = 0;
    for (k, &idx) in perm.iter().enumerate() {
        pos_b += gaps_b[k];
        out[idx].start_b = pos_b;
        pos_b += lens[idx];
    }
    out
}

fn match_sets() -> impl Strategy<Value = Vec<Match>> {
    (1usize..8).prop_flat_map(|k| {
        (
            prop::collection::vec(1usize..6, k),
            prop::collection::vec(0usize..9, k),
            prop::collection::vec(0usize..9, k),
            Just((0..k).collect::<Vec<usize>>()).prop_shuffle(),
            any::<bool>(),
        )
            .prop_map(|(lens, ga, gb, perm, keep_order)| {
                let perm = if keep_order { (0..lens.len()).collect() } else { perm };
                layout(&lens, &ga, &gb, &perm)
            })
    })
}

#[test]
fn chain_of_five_with_unit_gaps_becomes_one() {
    let ms = layout(&[3, 3, 3, 3, 3], &[0, 1, 1, 1, 1], &[0, 1, 1, 1, 1], &[0, 1, 2, 3, 4]);
    let p = SmmParams::default();
    let merged = merge_to_fixpoint(&ms, &p).unwrap();
    assert_eq!(spans(&merged), vec![(0, 0, 19, 19)]);
    assert_eq!(spans(&merged), smm_oracle(&ms, &p));
    assert_eq!((merged[0].gap_a, merged[0].gap_b), (4, 4));
}

#[test]
fn crossing_region_blocks_merge() {
    // The middle match sits between the outer two in `b` but after both in `a`.
    let ms = vec![Match::raw(0, 0, 4), Match::raw(6, 8, 4), Match::raw(12, 5, 2)];
    let merged = merge_to_fixpoint(&ms, &SmmParams::default()).unwrap();
    assert_eq!(merged.len(), 3);
}

proptest! {
    #[test]
    fn fixpoint_matches_exhaustive_reference(ms in match_sets(), max_gap in 0usize..8, min_n in 1usize..4) {
        let p = SmmParams { max_gap, min_neighbor_len: min_n, count_gap_tokens: true };
        let merged = merge_to_fixpoint(&ms, &p).unwrap();
        prop_assert_eq!(spans(&merged), smm_oracle(&ms, &p));
    }

    #[test]
    fn fixpoint_is_idempotent_terminating_and_disjoint(ms in match_sets(), max_gap in 0usize..8) {
        let p = SmmParams { max_gap, ..Default::default() };
        let merged = merge_to_fixpoint(&ms, &p).unwrap();
        prop_assert_eq!(merge_to_fixpoint(&merged, &p).unwrap(), merged.clone());
        let mut steps = 0;
        let mut cur = ms.clone();
        loop {
            let (next, changed) = merge_once(&cur, &p).unwrap();
            if !changed {
                break;
            }
            steps += 1;
            cur = next;
        }
        prop_assert!(steps <= ms.len());
        for (i, x) in merged.iter().enumerate() {
            for y in &merged[i + 1..] {
                prop_assert!(x.end_a() <= y.start_a || y.end_a() <= x.start_a);
                prop_assert!(x.end_b() <= y.start_b || y.end_b() <= x.start_b);
            }
        }
    }

    #[test]
    fn merging_never_lowers_similarity(
        a in prop::collection::vec(0u8..4, 0..60),
        b in prop::collection::vec(0u8..4, 0..60),
        min in 2usize..10,
    ) {
        let (sa, sb) = (symbols_to_seq("a", &a), symbols_to_seq("b", &b));
        let p = MatchParams { min_match_len: min };
        let (_, ca, cb) = compare_sequences(&sa, &sb, p, None);
        let (merged, ca2, cb2) = compare_sequences(&sa, &sb, p, Some(&SmmParams::default()));
        prop_assert!(ca2 + cb2 >= ca + cb);
        for (i, x) in merged.iter().enumerate() {
            for y in &merged[i + 1..] {
                prop_assert!(x.end_a() <= y.start_a || y.end_a() <= x.start_a);
                prop_assert!(x.end_b() <= y.start_b || y.end_b() <= x.start_b);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn merging_never_lowers_program_similarity(seed in any::<u64>(), attack in any::<u64>()) {
        let p = generate_program("p", seed, &small_programs());
        let recipe = ObfuscationRecipe::refactoring(attack, 10, &RefactorOp::ALL);
        let (q, _) = refactor_obfuscate(&p, &recipe).unwrap();
        let base = compare(&p, &q, MatchParams::default(), &DefenseConfig::none()).unwrap();
        let smm = compare(&p, &q, MatchParams::default(), &DefenseConfig::smm()).unwrap();
        prop_assert!(smm.similarity >= base.similarity);
        let tsn = compare(&p, &q, MatchParams::default(), &DefenseConfig::tsn()).unwrap();
        let both = compare(&p, &q, MatchParams::default(), &DefenseConfig::both()).unwrap();
        prop_assert!(both.similarity >= tsn.similarity);
    }
}
