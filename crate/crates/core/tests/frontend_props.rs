mod common;

use common::{rename_all, small_programs};
use plagguard_core::generator::generate_ast;
use plagguard_core::interp::interpret;
use plagguard_core::minilang::{render, walk_stmts, Item};
use plagguard_core::{tokenize, Program};
use proptest::prelude::*;

fn program(ast: &plagguard_core::minilang::Ast) -> Program {
    Program::minilang("p", render(ast))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn renaming_never_changes_tokens(seed in any::<u64>(), salt in 0u32..1000) {
        let ast = generate_ast(seed, &small_programs());
        let renamed = rename_all(&ast, |i, old| {
            if old.chars().any(|c| c.is_ascii_lowercase()) {
                format!("v{salt}_{i}")
            } else {
                format!("K{salt}_{i}")
            }
        });
        prop_assert_ne!(&renamed, &ast);
        let a = tokenize(&program(&ast)).unwrap();
        let b = tokenize(&program(&renamed)).unwrap();
        prop_assert_eq!(a.sequence.types(), b.sequence.types());
    }

    #[test]
    fn statement_spans_partition_statement_tokens(seed in any::<u64>()) {
        let e = tokenize(&program(&generate_ast(seed, &small_programs()))).unwrap();
        let mut owner = vec![None; e.sequence.len()];
        for g in &e.groups {
            prop_assert!(g.token_span.0 < g.token_span.1);
            for slot in &mut owner[g.token_span.0..g.token_span.1] {
                prop_assert!(slot.is_none());
                *slot = Some(g.stmt_id);
            }
            if let Some(parent) = g.control_parent {
                prop_assert!(parent < g.stmt_id);
            }
        }
        for (t, o) in e.sequence.tokens.iter().zip(&owner) {
            prop_assert_eq!(t.stmt_id, *o);
            prop_assert_eq!(t.kind.is_structural(), o.is_none());
            prop_assert!(t.line >= 1);
        }
    }

    #[test]
    fn render_parse_round_trip(seed in any::<u64>()) {
        let ast = generate_ast(seed, &small_programs());
        let text = render(&ast);
        let reparsed = program(&ast).parse().unwrap();
        prop_assert_eq!(render(&reparsed), text);
        prop_assert_eq!(reparsed, ast);
    }

    #[test]
    fn tokenize_and_interpret_are_pure(seed in any::<u64>(), input in prop::collection::vec(-50i64..50, 0..8)) {
        let ast = generate_ast(seed, &small_programs());
        let p = program(&ast);
        prop_assert_eq!(tokenize(&p).unwrap(), tokenize(&p.clone()).unwrap());
        let o = interpret(&ast, &input);
        prop_assert!(!matches!(o.error, Some(plagguard_core::interp::RuntimeError::StepBudgetExceeded(_))));
        prop_assert_eq!(o, interpret(&ast.clone(), &input));
    }
}

#[test]
fn generated_programs_are_in_the_requested_size_band() {
    let cfg = plagguard_core::generator::GeneratorConfig::default();
    for seed in 0..20 {
        let ast = generate_ast(seed, &cfg);
        let mut n = 0;
        for item in &ast.items {
            if let Item::Func(f) = item {
                walk_stmts(&f.body.stmts, &mut |_| n += 1);
            }
        }
        assert!((60..=120).contains(&n), "seed {seed}: {n} statements");
    }
}
