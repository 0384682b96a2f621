//! Interpreter-based behavior check for attack outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AttackError;
use crate::interp::{interpret_with_budget, Outcome};
use crate::minilang::Ast;

pub const RANDOM_VECTORS: usize = 32;
pub const VECTOR_LEN: usize = 16;
pub const BATTERY_STEP_BUDGET: u64 = 1_000_000;

/// 32 seeded random input vectors followed by the all-zero vector and
/// constant boundary vectors.
pub fn input_battery(seed: u64) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0BA7_7E41);
    let mut out: Vec<Vec<i64>> = (0..RANDOM_VECTORS)
        .map(|_| (0..VECTOR_LEN).map(|_| rng.gen_range(-100..=100)).collect())
        .collect();
    for v in [0, 1, -1, 1000] {
        out.push(vec![v; VECTOR_LEN]);
    }
    out
}

pub fn outcomes(ast: &Ast, battery: &[Vec<i64>]) -> Vec<Outcome> {
    battery
        .iter()
        .map(|input| interpret_with_budget(ast, input, BATTERY_STEP_BUDGET))
        .collect()
}

/// Fails with [`AttackError::BehaviorChanged`] on the first input whose
/// printed output or termination differs.
pub fn check_equivalent(original: &Ast, candidate: &Ast, battery: &[Vec<i64>]) -> Result<(), AttackError> {
    for input in battery {
        let expected = interpret_with_budget(original, input, BATTERY_STEP_BUDGET);
        let actual = interpret_with_budget(candidate, input, BATTERY_STEP_BUDGET);
        if expected != actual {
            return Err(AttackError::BehaviorChanged {
                input: input.clone(),
                expected: Box::new(expected),
                actual: Box::new(actual),
            });
        }
    }
    Ok(())
}
