//! Dead-statement insertion: exhaustive (one statement at every boundary)
//! and detector-guided hill descent toward a similarity threshold.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::battery::{check_equivalent, input_battery};
use super::sites::{block_mut, boundaries, dead_decl, identity_assign, Harvest, NameSource};
use super::{line_growth, AttackError, AttackKind, AttackStatus, AttackTrace, InsertionPool, ObfuscationRecipe};
use crate::frontend::{tokenize, Program};
use crate::matcher::{compare_prepared, prepare, DefenseConfig, MatchParams, Prepared};
use crate::minilang::{Ast, Stmt};

/// Inserts one dead declaration at every statement boundary of every
/// function, including the end of each block.
pub fn insert_dead_exhaustive(program: &Program, seed: u64) -> Result<(Program, AttackTrace), AttackError> {
    let recipe = ObfuscationRecipe::exhaustive(seed);
    let started = Instant::now();
    let original = program.parse()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names = NameSource::new(&original);
    let harvest = Harvest::from_ast(&original);

    let sites = boundaries(&original);
    let planned: Vec<Stmt> = sites
        .iter()
        .map(|b| dead_decl(&b.vars, &harvest, &mut names, &mut rng))
        .collect();
    // Boundaries come in pre-order, so applying them back to front never
    // shifts a position that is still pending.
    let mut ast = original.clone();
    for (b, stmt) in sites.iter().zip(planned).rev() {
        block_mut(&mut ast, &b.block).stmts.insert(b.pos, stmt);
    }

    let out = program.with_ast(program.id.clone(), &ast);
    let reparsed = out.parse()?;
    check_equivalent(&original, &reparsed, &input_battery(seed))?;

    let mut trace = AttackTrace::new(&recipe);
    trace.iterations = sites.len();
    trace.inserted_statements = reparsed.statement_count() - original.statement_count();
    trace.size_growth = growth(program, &out);
    trace.wall_time_secs = started.elapsed().as_secs_f64();
    Ok((out, trace))
}

/// Detector the threshold attack evades, plus its iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub defenses: DefenseConfig,
    pub params: MatchParams,
    pub max_iters: usize,
}

struct Scorer<'a> {
    program: &'a Program,
    original: Prepared,
    cfg: &'a ThresholdConfig,
    comparisons: usize,
}

impl Scorer<'_> {
    fn score(&mut self, ast: &Ast) -> Result<f64, AttackError> {
        let candidate = self.program.with_ast(self.program.id.clone(), ast);
        let prepared = prepare(&tokenize(&candidate)?, self.cfg.defenses.tsn);
        self.comparisons += 1;
        Ok(compare_prepared(&self.original, &prepared, self.cfg.params, &self.cfg.defenses).similarity)
    }
}

/// Randomized hill descent: proposes one insertion at a random boundary,
/// keeps it iff the similarity to the original does not increase, and stops
/// once the similarity is at most the recipe threshold. Running out of
/// iterations returns the best program so far with
/// [`AttackStatus::MaxItersExceeded`].
pub fn insert_dead_threshold(
    program: &Program,
    recipe: &ObfuscationRecipe,
    cfg: &ThresholdConfig,
) -> Result<(Program, AttackTrace), AttackError> {
    recipe.validate()?;
    if recipe.kind != AttackKind::InsertionThreshold {
        return Err(AttackError::InvalidRecipe(format!(
            "expected insertion_threshold, got {:?}",
            recipe.kind
        )));
    }
    let threshold = recipe.threshold.expect("validated");
    let started = Instant::now();
    let original = program.parse()?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let mut names = NameSource::new(&original);
    let harvest = Harvest::from_ast(&original);
    let mut scorer = Scorer {
        program,
        original: prepare(&tokenize(program)?, cfg.defenses.tsn),
        cfg,
        comparisons: 0,
    };

    let mut trace = AttackTrace::new(recipe);
    let mut current = original.clone();
    let mut sim = scorer.score(&current)?;
    trace.similarity_trajectory.push(sim);
    while sim > threshold {
        if trace.iterations >= cfg.max_iters {
            trace.status = AttackStatus::MaxItersExceeded;
            break;
        }
        trace.iterations += 1;
        let sites = boundaries(&current);
        let site = &sites[rng.gen_range(0..sites.len())];
        let stmt = match recipe.pool {
            InsertionPool::PureDead => dead_decl(&site.vars, &harvest, &mut names, &mut rng),
            InsertionPool::Mixed => {
                let assign = if rng.gen_bool(0.5) {
                    identity_assign(&site.vars, &mut rng)
                } else {
                    None
                };
                assign.unwrap_or_else(|| dead_decl(&site.vars, &harvest, &mut names, &mut rng))
            }
        };
        let mut candidate = current.clone();
        block_mut(&mut candidate, &site.block).stmts.insert(site.pos, stmt);
        let s = scorer.score(&candidate)?;
        if s <= sim {
            current = candidate;
            sim = s;
            trace.similarity_trajectory.push(s);
        }
    }

    let out = program.with_ast(program.id.clone(), &current);
    let reparsed = out.parse()?;
    check_equivalent(&original, &reparsed, &input_battery(recipe.seed))?;
    trace.inserted_statements = reparsed.statement_count() - original.statement_count();
    trace.size_growth = growth(program, &out);
    trace.comparisons = scorer.comparisons;
    trace.wall_time_secs = started.elapsed().as_secs_f64();
    Ok((out, trace))
}

fn growth(before: &Program, after: &Program) -> f64 {
    let text = |p: &Program| p.files.iter().map(|f| f.text.as_str()).collect::<Vec<_>>().join("\n");
    line_growth(&text(before), &text(after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::interpret;

    const SRC: &str = "fn twice(int a) {
    int r = a * 2;
    return r;
}

fn main() {
    int x = read();
    int y = read();
    if (x > y) {
        print(twice(x));
    } else {
        print(y);
    }
    int i = 0;
    while (i < 3) {
        y = y + i;
        i = i + 1;
    }
    print(y);
}
";

    #[test]
    fn exhaustive_fills_every_boundary() {
        let p = Program::minilang("p", SRC);
        let ast = p.parse().unwrap();
        let n = boundaries(&ast).len();
        let (out, trace) = insert_dead_exhaustive(&p, 1).unwrap();
        assert_eq!(trace.inserted_statements, n);
        assert_eq!(out.line_count(), p.line_count() + n);
        let attacked = out.parse().unwrap();
        assert_eq!(interpret(&ast, &[4, 9]), interpret(&attacked, &[4, 9]));
        let (again, _) = insert_dead_exhaustive(&p, 1).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn threshold_100_is_a_no_op() {
        let p = Program::minilang("p", SRC);
        let cfg = ThresholdConfig {
            defenses: DefenseConfig::none(),
            params: MatchParams::default(),
            max_iters: 50,
        };
        let recipe = ObfuscationRecipe::threshold(3, 100.0, InsertionPool::PureDead);
        let (out, trace) = insert_dead_threshold(&p, &recipe, &cfg).unwrap();
        assert_eq!(trace.iterations, 0);
        assert_eq!(trace.status, AttackStatus::Completed);
        assert_eq!(out.parse().unwrap(), p.parse().unwrap());
    }

    #[test]
    fn bad_threshold_is_rejected() {
        let p = Program::minilang("p", SRC);
        let cfg = ThresholdConfig {
            defenses: DefenseConfig::none(),
            params: MatchParams::default(),
            max_iters: 5,
        };
        let recipe = ObfuscationRecipe::threshold(3, 0.0, InsertionPool::PureDead);
        assert!(matches!(
            insert_dead_threshold(&p, &recipe, &cfg),
            Err(AttackError::InvalidRecipe(_))
        ));
    }
}
