mod common;

use common::small_programs;
use plagguard_core::attacks::{
    input_battery, insert_dead_exhaustive, insert_dead_threshold, refactor_obfuscate, AttackStatus, InsertionPool,
    ObfuscationRecipe, RefactorOp, ThresholdConfig,
};
use plagguard_core::generator::generate_program;
use plagguard_core::interp::interpret;
use plagguard_core::matcher::{compare, DefenseConfig, MatchParams};
use plagguard_core::Program;
use proptest::prelude::*;

fn same_behavior(a: &Program, b: &Program, seed: u64) -> bool {
    let (x, y) = (a.parse().unwrap(), b.parse().unwrap());
    input_battery(seed).iter().all(|i| interpret(&x, i) == interpret(&y, i))
}

#[test]
fn exhaustive_insertion_breaks_baseline_on_large_programs() {
    for seed in 0..5 {
        let p = generate_program("p", seed, &Default::default());
        assert!(p.parse().unwrap().statement_count() >= 50);
        let (q, _) = insert_dead_exhaustive(&p, seed).unwrap();
        let sim = compare(&p, &q, MatchParams::default(), &DefenseConfig::none())
            .unwrap()
            .similarity;
        assert!(sim < 60.0, "seed {seed}: {sim}");
        let tsn = compare(&p, &q, MatchParams::default(), &DefenseConfig::tsn())
            .unwrap()
            .similarity;
        assert_eq!(tsn, 100.0);
    }
}

#[test]
fn threshold_attack_reaches_target_against_baseline_and_stalls_against_tsn() {
    let p = generate_program("p", 3, &small_programs());
    let base = ThresholdConfig {
        defenses: DefenseConfig::none(),
        params: MatchParams::default(),
        max_iters: 2000,
    };
    let recipe = ObfuscationRecipe::threshold(5, 25.0, InsertionPool::PureDead);
    let (q, trace) = insert_dead_threshold(&p, &recipe, &base).unwrap();
    assert_eq!(trace.status, AttackStatus::Completed);
    assert!(*trace.similarity_trajectory.last().unwrap() <= 25.0);
    assert!(trace.similarity_trajectory.windows(2).all(|w| w[1] <= w[0]));
    assert!(
        compare(&p, &q, MatchParams::default(), &DefenseConfig::none())
            .unwrap()
            .similarity
            <= 25.0
    );

    let tsn = ThresholdConfig {
        defenses: DefenseConfig::tsn(),
        max_iters: 60,
        ..base
    };
    let (_, trace) = insert_dead_threshold(&p, &recipe, &tsn).unwrap();
    assert_eq!(trace.status, AttackStatus::MaxItersExceeded);
    assert_eq!(trace.iterations, 60);
    assert!(trace.similarity_trajectory.iter().all(|s| *s == 100.0));
}

#[test]
fn op_tags_round_trip() {
    for op in RefactorOp::ALL {
        assert_eq!(op.tag().parse::<RefactorOp>().unwrap(), op);
        assert_eq!(serde_json::to_string(&op).unwrap(), format!("\"{}\"", op.tag()));
    }
    assert!("rename".parse::<RefactorOp>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exhaustive_insertion_is_deterministic_and_equivalent(seed in any::<u64>(), attack in any::<u64>()) {
        let p = generate_program("p", seed, &small_programs());
        let (q, trace) = insert_dead_exhaustive(&p, attack).unwrap();
        let (q2, _) = insert_dead_exhaustive(&p, attack).unwrap();
        prop_assert_eq!(&q, &q2);
        prop_assert!(same_behavior(&p, &q, attack));
        let before = p.parse().unwrap().statement_count();
        let after = q.parse().unwrap().statement_count();
        prop_assert_eq!(trace.inserted_statements, after - before);
        prop_assert_eq!(q.line_count(), p.line_count() + trace.inserted_statements);
    }

    #[test]
    fn refactoring_is_deterministic_and_equivalent(
        seed in any::<u64>(),
        attack in any::<u64>(),
        intensity in 0usize..40,
        mask in 1u8..32,
    ) {
        let ops: Vec<RefactorOp> = RefactorOp::ALL.into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, o)| o).collect();
        let p = generate_program("p", seed, &small_programs());
        let recipe = ObfuscationRecipe::refactoring(attack, intensity, &ops);
        let (q, trace) = refactor_obfuscate(&p, &recipe).unwrap();
        let (q2, trace2) = refactor_obfuscate(&p, &recipe).unwrap();
        prop_assert_eq!(&q, &q2);
        prop_assert_eq!(&trace.applied_ops, &trace2.applied_ops);
        prop_assert_eq!(trace.applied_ops.len() + trace.skipped_ops, intensity);
        prop_assert!(trace.applied_ops.iter().all(|o| ops.contains(o)));
        prop_assert!(same_behavior(&p, &q, attack));
        let before = p.parse().unwrap().statement_count();
        let after = q.parse().unwrap().statement_count();
        prop_assert_eq!(trace.inserted_statements, after.saturating_sub(before));
    }

    #[test]
    fn threshold_trajectory_never_increases(seed in any::<u64>(), attack in any::<u64>(), mixed in any::<bool>()) {
        let p = generate_program("p", seed, &small_programs());
        let pool = if mixed { InsertionPool::Mixed } else { InsertionPool::PureDead };
        let cfg = ThresholdConfig { defenses: DefenseConfig::smm(), params: MatchParams::default(), max_iters: 40 };
        let (q, trace) = insert_dead_threshold(&p, &ObfuscationRecipe::threshold(attack, 50.0, pool), &cfg).unwrap();
        prop_assert!(trace.similarity_trajectory.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(trace.iterations <= 40);
        prop_assert!(same_behavior(&p, &q, attack));
    }
}
