//! Refactoring-based obfuscation: seeded, behavior-preserving rewrites.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::battery::{check_equivalent, input_battery};
use super::sites::{block_mut, boundaries, const_vars, dead_decl, template, typed_ok, Harvest, NameSource, VarInfo};
use super::{line_growth, AttackError, AttackKind, AttackTrace, ObfuscationRecipe, RefactorOp};
use crate::frontend::Program;
use crate::minilang::*;

/// Applies `recipe.intensity` operations drawn from the whitelist. An
/// operation without an applicable site is skipped and counted.
pub fn refactor_obfuscate(
    program: &Program,
    recipe: &ObfuscationRecipe,
) -> Result<(Program, AttackTrace), AttackError> {
    recipe.validate()?;
    if recipe.kind != AttackKind::Refactoring {
        return Err(AttackError::InvalidRecipe(format!(
            "expected refactoring, got {:?}",
            recipe.kind
        )));
    }
    let started = Instant::now();
    let original = program.parse()?;
    let harvest = Harvest::from_ast(&original);
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let mut ast = original.clone();
    let mut trace = AttackTrace::new(recipe);
    for _ in 0..recipe.intensity {
        trace.iterations += 1;
        let op = *recipe.op_whitelist.choose(&mut rng).expect("validated whitelist");
        if apply(op, &mut ast, &harvest, &mut rng) {
            trace.applied_ops.push(op);
        } else {
            trace.skipped_ops += 1;
        }
    }

    let out = program.with_ast(program.id.clone(), &ast);
    let reparsed = out.parse()?;
    check_equivalent(&original, &reparsed, &input_battery(recipe.seed))?;
    trace.inserted_statements = reparsed.statement_count().saturating_sub(original.statement_count());
    let text = |p: &Program| p.files.iter().map(|f| f.text.as_str()).collect::<Vec<_>>().join("\n");
    trace.size_growth = line_growth(&text(program), &text(&out));
    trace.wall_time_secs = started.elapsed().as_secs_f64();
    Ok((out, trace))
}

fn apply(op: RefactorOp, ast: &mut Ast, harvest: &Harvest, rng: &mut ChaCha8Rng) -> bool {
    match op {
        RefactorOp::SwapIfElse => swap_if_else(ast, rng),
        RefactorOp::ExtractExprVar => extract_expr_var(ast, rng),
        RefactorOp::ExtractConstant => extract_constant(ast, rng),
        RefactorOp::InsertDeadFunction => insert_dead_function(ast, harvest, rng),
        RefactorOp::WrapInBlock => wrap_in_block(ast, rng),
    }
}

fn for_each_fn_stmt(ast: &mut Ast, f: &mut impl FnMut(&mut Stmt)) {
    for item in &mut ast.items {
        if let Item::Func(func) = item {
            walk_stmts_mut(&mut func.body.stmts, f);
        }
    }
}

/// `if (c) {A} else {B}` becomes `if (!(c)) {B} else {A}`; a missing else
/// becomes an empty then-branch.
fn swap_if_else(ast: &mut Ast, rng: &mut ChaCha8Rng) -> bool {
    let mut count = 0;
    for_each_fn_stmt(ast, &mut |s| {
        if matches!(s.kind, StmtKind::If { .. }) {
            count += 1;
        }
    });
    if count == 0 {
        return false;
    }
    let target = rng.gen_range(0..count);
    let mut seen = 0;
    for_each_fn_stmt(ast, &mut |s| {
        if let StmtKind::If {
            cond,
            then_body,
            else_body,
        } = &mut s.kind
        {
            if seen == target {
                let c = std::mem::replace(cond, Expr::Bool(true));
                *cond = Expr::unary(UnOp::Not, c);
                let old_then = std::mem::replace(then_body, else_body.take().unwrap_or_else(|| Block::new(Vec::new())));
                *else_body = Some(old_then);
            }
            seen += 1;
        }
    });
    true
}

/// Pre-order walk over candidate subexpressions. The right operand of a
/// short-circuit operator is never entered since it may not be evaluated.
/// With `target`, the matching candidate is replaced by `Var(name)` and
/// returned with its type.
fn extract_walk(
    e: &mut Expr,
    ok: &dyn Fn(&Expr) -> Option<Type>,
    target: Option<usize>,
    seen: &mut usize,
    name: &str,
) -> Option<(Expr, Type)> {
    if e.node_count() >= 2 {
        if let Some(t) = ok(e) {
            if target == Some(*seen) {
                let sub = std::mem::replace(e, Expr::var(name));
                return Some((sub, t));
            }
            *seen += 1;
        }
    }
    match e {
        Expr::Unary { expr, .. } => extract_walk(expr, ok, target, seen, name),
        Expr::Binary {
            op: BinOp::And | BinOp::Or,
            lhs,
            ..
        } => extract_walk(lhs, ok, target, seen, name),
        Expr::Binary { lhs, rhs, .. } => {
            extract_walk(lhs, ok, target, seen, name).or_else(|| extract_walk(rhs, ok, target, seen, name))
        }
        Expr::Call { args, .. } => args.iter_mut().find_map(|a| extract_walk(a, ok, target, seen, name)),
        _ => None,
    }
}

fn stmt_extract(
    s: &mut Stmt,
    vars: &[VarInfo],
    target: Option<usize>,
    seen: &mut usize,
    name: &str,
) -> Option<(Expr, Type)> {
    if matches!(s.kind, StmtKind::While { .. }) {
        return None;
    }
    let lookup = |n: &str| vars.iter().rev().find(|v| v.name == n).map(|v| v.ty);
    let ok = |e: &Expr| {
        if e.is_pure_total() && typed_ok(e, &lookup) {
            super::sites::expr_type(e, &lookup)
        } else {
            None
        }
    };
    s.own_exprs_mut()
        .into_iter()
        .find_map(|e| extract_walk(e, &ok, target, seen, name))
}

/// Hoists a pure subexpression of a statement into a fresh variable
/// declared just before it.
fn extract_expr_var(ast: &mut Ast, rng: &mut ChaCha8Rng) -> bool {
    let sites = boundaries(ast);
    let mut scratch = ast.clone();
    let mut counts = Vec::with_capacity(sites.len());
    for b in &sites {
        let block = block_mut(&mut scratch, &b.block);
        let mut seen = 0;
        if let Some(s) = block.stmts.get_mut(b.pos) {
            stmt_extract(s, &b.vars, None, &mut seen, "");
        }
        counts.push(seen);
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return false;
    }
    let mut k = rng.gen_range(0..total);
    let idx = counts
        .iter()
        .position(|&c| {
            if k < c {
                true
            } else {
                k -= c;
                false
            }
        })
        .expect("k < total");
    let b = &sites[idx];
    let name = NameSource::new(ast).fresh(rng);
    let block = block_mut(ast, &b.block);
    let mut seen = 0;
    let (sub, ty) = stmt_extract(&mut block.stmts[b.pos], &b.vars, Some(k), &mut seen, &name).expect("counted site");
    block.stmts.insert(
        b.pos,
        Stmt::new(StmtKind::VarDecl {
            ty,
            name,
            init: Some(sub),
        }),
    );
    true
}

/// Pre-order walk over integer literals, skipping literal divisors so that
/// divisions keep their statically known nonzero right operand.
fn literal_walk(e: &mut Expr, target: Option<usize>, seen: &mut usize, name: &str) -> Option<i64> {
    match e {
        Expr::Int(v) => {
            let v = *v;
            if target == Some(*seen) {
                *e = Expr::var(name);
                return Some(v);
            }
            *seen += 1;
            None
        }
        Expr::Binary {
            op: BinOp::Div | BinOp::Mod,
            lhs,
            rhs,
        } => literal_walk(lhs, target, seen, name).or_else(|| {
            if matches!(**rhs, Expr::Int(_)) {
                None
            } else {
                literal_walk(rhs, target, seen, name)
            }
        }),
        Expr::Binary { lhs, rhs, .. } => {
            literal_walk(lhs, target, seen, name).or_else(|| literal_walk(rhs, target, seen, name))
        }
        Expr::Unary { expr, .. } => literal_walk(expr, target, seen, name),
        Expr::Call { args, .. } => args.iter_mut().find_map(|a| literal_walk(a, target, seen, name)),
        _ => None,
    }
}

/// Replaces one integer literal with a fresh global constant.
fn extract_constant(ast: &mut Ast, rng: &mut ChaCha8Rng) -> bool {
    let mut scratch = ast.clone();
    let mut total = 0;
    for_each_fn_stmt(&mut scratch, &mut |s| {
        for e in s.own_exprs_mut() {
            literal_walk(e, None, &mut total, "");
        }
    });
    if total == 0 {
        return false;
    }
    let target = rng.gen_range(0..total);
    let name = NameSource::new(ast).fresh_const(rng);
    let mut seen = 0;
    let mut value = None;
    for_each_fn_stmt(ast, &mut |s| {
        for e in s.own_exprs_mut() {
            if value.is_none() {
                value = literal_walk(e, Some(target), &mut seen, &name);
            }
        }
    });
    let value = value.expect("counted literal");
    let pos = ast
        .items
        .iter()
        .rposition(|i| matches!(i, Item::Const(_)))
        .map_or(0, |p| p + 1);
    let file = pos.checked_sub(1).map_or(0, |p| ast.items[p].file());
    ast.items.insert(
        pos,
        Item::Const(ConstDecl {
            ty: Type::Int,
            name,
            value: Expr::Int(value),
            line: 1,
            file,
        }),
    );
    true
}

/// Adds a function that nothing calls.
fn insert_dead_function(ast: &mut Ast, harvest: &Harvest, rng: &mut ChaCha8Rng) -> bool {
    let mut names = NameSource::new(ast);
    let fn_name = names.fresh(rng);
    let params: Vec<Param> = (0..rng.gen_range(1..=3))
        .map(|_| Param {
            ty: Type::Int,
            name: names.fresh(rng),
        })
        .collect();
    let mut vars = const_vars(ast);
    vars.extend(params.iter().map(|p| VarInfo {
        name: p.name.clone(),
        ty: p.ty,
        constant: false,
    }));
    let mut stmts = Vec::new();
    for _ in 0..rng.gen_range(2..=4) {
        let s = dead_decl(&vars, harvest, &mut names, rng);
        if let StmtKind::VarDecl { ty, name, .. } = &s.kind {
            vars.push(VarInfo {
                name: name.clone(),
                ty: *ty,
                constant: false,
            });
        }
        stmts.push(s);
    }
    let (ret, _) = template(rng.gen_range(0..12), &vars, rng);
    stmts.push(Stmt::new(StmtKind::Return(Some(ret))));

    let first = ast
        .items
        .iter()
        .rposition(|i| matches!(i, Item::Const(_)))
        .map_or(0, |p| p + 1);
    let pos = rng.gen_range(first..=ast.items.len());
    let file = ast.items.get(pos).or_else(|| ast.items.last()).map_or(0, Item::file);
    ast.items.insert(
        pos,
        Item::Func(FnDecl {
            name: fn_name,
            params,
            body: Block::new(stmts),
            line: 1,
            file,
        }),
    );
    true
}

/// Wraps one to three consecutive statements in `if (true) { ... }`.
fn wrap_in_block(ast: &mut Ast, rng: &mut ChaCha8Rng) -> bool {
    let sites: Vec<_> = boundaries(ast).into_iter().filter(|b| b.pos > 0).collect();
    // A boundary at `pos > 0` marks statement `pos - 1` as a valid start.
    let Some(b) = sites.choose(rng) else {
        return false;
    };
    let block = block_mut(ast, &b.block);
    let start = b.pos - 1;
    let len = rng.gen_range(1..=3usize.min(block.stmts.len() - start));
    let body: Vec<Stmt> = block.stmts.drain(start..start + len).collect();
    block.stmts.insert(
        start,
        Stmt::new(StmtKind::If {
            cond: Expr::Bool(true),
            then_body: Block::new(body),
            else_body: None,
        }),
    );
    true
}
