mod common;

use common::small_programs;
use plagguard_core::attacks::{input_battery, insert_dead_exhaustive};
use plagguard_core::generator::{generate_ast, generate_corpus, generate_program};
use plagguard_core::interp::interpret;
use plagguard_core::matcher::{compare_corpus, DefenseConfig, MatchParams};
use plagguard_core::minilang::{render, Ast, Expr, Item, Stmt, StmtKind};
use plagguard_core::stats::summarize;
use plagguard_core::tsn::{normalize, normalize_program};
use plagguard_core::{tokenize, Program, TokenSequence};
use proptest::prelude::*;

fn normalized(p: &Program) -> TokenSequence {
    normalize(&tokenize(p).unwrap()).unwrap()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out
}

#[test]
fn every_permutation_of_independent_statements_linearizes_identically() {
    let stmts = [
        "int a = 1;",
        "int b = 2 * 3;",
        "bool c = true;",
        "int d = 4 + 5 - 6;",
        "int e = -7;",
        "bool f = 1 < 2;",
    ];
    for k in 1..=stmts.len() {
        let perms = permutations(k);
        let mut outputs = std::collections::BTreeSet::new();
        for perm in &perms {
            let body: Vec<&str> = perm.iter().map(|&i| stmts[i]).collect();
            let uses: Vec<&str> = ["a", "b", "c", "d", "e", "f"][..k].to_vec();
            let src = format!("fn main() {{ {} print({}); }}", body.join(" "), uses.join(" == "));
            let src = if k == 1 {
                format!("fn main() {{ {} print(a); }}", stmts[0])
            } else {
                src
            };
            outputs.insert(normalized(&Program::minilang("p", src)).types());
        }
        assert_eq!(outputs.len(), 1, "k = {k}: {} permutations", perms.len());
    }
}

/// Swaps adjacent straight-line statements that share no variables and
/// contain no calls or reads.
fn swap_independent(stmts: &mut [Stmt]) -> usize {
    fn simple(s: &Stmt) -> Option<(String, Vec<String>)> {
        let (name, e) = match &s.kind {
            StmtKind::VarDecl {
                name, init: Some(e), ..
            } => (name, e),
            StmtKind::Assign { name, value } => (name, value),
            _ => return None,
        };
        if e.contains_call() || e.contains_read() || !e.is_pure_total() {
            return None;
        }
        let mut reads = Vec::new();
        e.for_each_var(&mut |v| reads.push(v.to_string()));
        Some((name.clone(), reads))
    }
    let mut swaps = 0;
    let mut i = 0;
    while i + 1 < stmts.len() {
        if let (Some((w1, r1)), Some((w2, r2))) = (simple(&stmts[i]), simple(&stmts[i + 1])) {
            if w1 != w2 && !r1.contains(&w2) && !r2.contains(&w1) {
                stmts.swap(i, i + 1);
                swaps += 1;
                i += 2;
                continue;
            }
        }
        i += 1;
    }
    for s in stmts.iter_mut() {
        match &mut s.kind {
            StmtKind::If {
                then_body, else_body, ..
            } => {
                swaps += swap_independent(&mut then_body.stmts);
                if let Some(b) = else_body {
                    swaps += swap_independent(&mut b.stmts);
                }
            }
            StmtKind::While { body, .. } => swaps += swap_independent(&mut body.stmts),
            _ => {}
        }
    }
    swaps
}

fn reorder(ast: &Ast) -> (Ast, usize) {
    let mut out = ast.clone();
    let mut swaps = 0;
    for item in &mut out.items {
        if let Item::Func(f) = item {
            swaps += swap_independent(&mut f.body.stmts);
        }
    }
    (out, swaps)
}

#[test]
fn normalization_is_idempotent_on_100_programs() {
    let cfg = small_programs();
    for seed in 0..100 {
        let ast = generate_ast(seed, &cfg);
        let p = Program::minilang("p", render(&ast));
        let again = Program::minilang("p", render(&normalize_program(&ast).unwrap()));
        assert_eq!(normalized(&p).types(), normalized(&again).types(), "seed {seed}");
        assert_eq!(
            tokenize(&again).unwrap().sequence.types(),
            normalized(&p).types(),
            "seed {seed}"
        );
    }
}

#[test]
fn unrelated_pairs_barely_move_under_normalization() {
    let corpus = generate_corpus(20, 77, &Default::default());
    let base = compare_corpus(&corpus, MatchParams::default(), &DefenseConfig::none(), 4).unwrap();
    let tsn = compare_corpus(&corpus, MatchParams::default(), &DefenseConfig::tsn(), 4).unwrap();
    let b: Vec<f64> = base.iter().map(|r| r.similarity).collect();
    let t: Vec<f64> = tsn.iter().map(|r| r.similarity).collect();
    let shift = summarize(&t).unwrap().median - summarize(&b).unwrap().median;
    assert!(shift.abs() <= 2.0, "median shift {shift}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exhaustive_insertion_is_invisible_after_normalization(seed in any::<u64>(), attack_seed in any::<u64>()) {
        let p = generate_program("p", seed, &small_programs());
        let (attacked, _) = insert_dead_exhaustive(&p, attack_seed).unwrap();
        prop_assert_eq!(normalized(&p).types(), normalized(&attacked).types());
    }

    #[test]
    fn reordering_independent_statements_is_invisible(seed in any::<u64>()) {
        let ast = generate_ast(seed, &small_programs());
        let (reordered, _) = reorder(&ast);
        let battery = input_battery(seed);
        for input in battery.iter().take(4) {
            prop_assert_eq!(interpret(&ast, input), interpret(&reordered, input));
        }
        let a = normalized(&Program::minilang("p", render(&ast)));
        let b = normalized(&Program::minilang("p", render(&reordered)));
        prop_assert_eq!(a.types(), b.types());
    }

    #[test]
    fn dead_node_removal_preserves_behavior(seed in any::<u64>()) {
        let ast = generate_ast(seed, &small_programs());
        let (attacked, _) = insert_dead_exhaustive(&Program::minilang("p", render(&ast)), seed).unwrap();
        let attacked = attacked.parse().unwrap();
        let norm = normalize_program(&attacked).unwrap();
        let reparsed = Program::minilang("n", render(&norm)).parse().unwrap();
        prop_assert!(reparsed.statement_count() <= attacked.statement_count());
        for input in input_battery(seed).iter().take(8) {
            prop_assert_eq!(interpret(&attacked, input), interpret(&reparsed, input));
        }
    }
}

#[test]
fn reorder_helper_actually_reorders() {
    let total: usize = (0..20).map(|s| reorder(&generate_ast(s, &small_programs())).1).sum();
    assert!(total > 0);
    let _ = Expr::Int(0);
}
