//! Independent reference implementations used as test oracles, plus small
//! program helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use plagguard_core::generator::GeneratorConfig;
use plagguard_core::matcher::Match;
use plagguard_core::minilang::{walk_stmts_mut, Ast, Expr, Item, StmtKind};
use plagguard_core::smm::SmmParams;
use plagguard_core::{TokenSequence, TokenType};

/// Token sequence over the first `alphabet` token types.
pub fn symbols_to_seq(id: &str, symbols: &[u8]) -> TokenSequence {
    let types: Vec<TokenType> = symbols.iter().map(|&s| TokenType::ALL[s as usize]).collect();
    TokenSequence::from_types(id, &types)
}

/// Greedy-maximal tiling by exhaustive search: at every step enumerate every
/// common substring over unmarked positions, take the longest (smallest
/// start in `a`, then in `b`), mark it. Returns the tiles as
/// `(start_a, start_b, len)`.
pub fn gst_oracle(a: &[u8], b: &[u8], min: usize) -> Vec<(usize, usize, usize)> {
    let mut ma = vec![false; a.len()];
    let mut mb = vec![false; b.len()];
    let mut tiles = Vec::new();
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..a.len() {
            for j in 0..b.len() {
                let mut l = 0;
                while i + l < a.len() && j + l < b.len() && !ma[i + l] && !mb[j + l] && a[i + l] == b[j + l] {
                    l += 1;
                }
                if l > best.map_or(0, |t| t.2) {
                    best = Some((i, j, l));
                }
            }
        }
        match best {
            Some((i, j, l)) if l >= min => {
                for k in 0..l {
                    ma[i + k] = true;
                    mb[j + k] = true;
                }
                tiles.push((i, j, l));
            }
            _ => break,
        }
    }
    tiles.sort();
    tiles
}

/// One-sided signed-rank p-value by enumerating all 2^n sign assignments of
/// the (tie-free) ranks of |x - y|. Zero differences are dropped first.
pub fn wilcoxon_enumeration_p(x: &[f64], y: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut rank = vec![0u64; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u64 + 1;
    }
    let observed: u64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| rank[i]).sum();
    let mut at_least = 0u64;
    for mask in 0u64..(1 << n) {
        let w: u64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| rank[i]).sum();
        if w >= observed {
            at_least += 1;
        }
    }
    (observed as f64, at_least as f64 / (1u64 << n) as f64)
}

/// Cliff's delta by counting every cross pair.
pub fn cliffs_pairs(x: &[f64], y: &[f64]) -> (u64, u64, f64) {
    let (mut gt, mut lt) = (0u64, 0u64);
    for a in x {
        for b in y {
            if a > b {
                gt += 1;
            } else if a < b {
                lt += 1;
            }
        }
    }
    let delta = (gt as f64 - lt as f64) / (x.len() * y.len()) as f64;
    (gt, lt, delta)
}

/// Type-7 quantile written from its definition: position 1 + (n-1)p on the
/// 1-based order statistics.
pub fn type7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = 1.0 + (v.len() as f64 - 1.0) * p;
    let k = pos.floor() as usize;
    if k >= v.len() {
        return v[v.len() - 1];
    }
    v[k - 1] + (pos - k as f64) * (v[k] - v[k - 1])
}

/// Merge fixpoint by exhaustive pairwise search: any pair that is adjacent
/// in both sequences (no other match between them in either order), lies
/// within the gap limit and has long enough members is merged; among all such
/// pairs the one with the smallest left start in `a` goes first.
pub fn smm_oracle(matches: &[Match], p: &SmmParams) -> Vec<(usize, usize, usize, usize)> {
    let mut ms: Vec<(usize, usize, usize, usize)> = matches
        .iter()
        .map(|m| (m.start_a, m.start_b, m.len_a, m.len_b))
        .collect();
    'outer: loop {
        let mut candidates = Vec::new();
        for x in 0..ms.len() {
            for y in 0..ms.len() {
                let (m1, m2) = (ms[x], ms[y]);
                if x == y || m2.0 < m1.0 + m1.2 || m2.1 < m1.1 + m1.3 {
                    continue;
                }
                let between = ms
                    .iter()
                    .enumerate()
                    .any(|(z, m)| z != x && z != y && ((m.0 > m1.0 && m.0 < m2.0) || (m.1 > m1.1 && m.1 < m2.1)));
                let gap_a = m2.0 - (m1.0 + m1.2);
                let gap_b = m2.1 - (m1.1 + m1.3);
                let shortest = m1.2.min(m1.3).min(m2.2).min(m2.3);
                if !between && gap_a <= p.max_gap && gap_b <= p.max_gap && shortest >= p.min_neighbor_len {
                    candidates.push((m1.0, x, y));
                }
            }
        }
        candidates.sort();
        if let Some(&(_, x, y)) = candidates.first() {
            let (m1, m2) = (ms[x], ms[y]);
            let merged = (m1.0, m1.1, m2.0 + m2.2 - m1.0, m2.1 + m2.3 - m1.1);
            ms = ms
                .into_iter()
                .enumerate()
                .filter(|(z, _)| *z != x && *z != y)
                .map(|(_, m)| m)
                .collect();
            ms.push(merged);
            continue 'outer;
        }
        break;
    }
    ms.sort();
    ms
}

/// Renames every identifier except `main` through `f`, keeping the mapping
/// consistent across the program.
pub fn rename_all(ast: &Ast, f: impl Fn(usize, &str) -> String) -> Ast {
    let map: BTreeMap<String, String> = ast
        .names()
        .into_iter()
        .filter(|n| n != "main")
        .enumerate()
        .map(|(i, n)| {
            let new = f(i, &n);
            (n, new)
        })
        .collect();
    let ren = |n: &mut String| {
        if let Some(m) = map.get(n.as_str()) {
            *n = m.clone();
        }
    };
    fn expr(e: &mut Expr, ren: &dyn Fn(&mut String)) {
        match e {
            Expr::Var(n) => ren(n),
            Expr::Call { name, args } => {
                ren(name);
                args.iter_mut().for_each(|a| expr(a, ren));
            }
            Expr::Unary { expr: inner, .. } => expr(inner, ren),
            Expr::Binary { lhs, rhs, .. } => {
                expr(lhs, ren);
                expr(rhs, ren);
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Read => {}
        }
    }
    let mut out = ast.clone();
    for item in &mut out.items {
        match item {
            Item::Const(c) => ren(&mut c.name),
            Item::Func(f) => {
                ren(&mut f.name);
                f.params.iter_mut().for_each(|p| ren(&mut p.name));
                walk_stmts_mut(&mut f.body.stmts, &mut |s| {
                    for e in s.own_exprs_mut() {
                        expr(e, &ren);
                    }
                    if let StmtKind::VarDecl { name, .. }
                    | StmtKind::Assign { name, .. }
                    | StmtKind::Call { name, .. } = &mut s.kind
                    {
                        ren(name);
                    }
                });
            }
        }
    }
    out
}

/// Generator settings for fast property tests.
pub fn small_programs() -> GeneratorConfig {
    GeneratorConfig {
        min_statements: 12,
        max_statements: 30,
        max_depth: 2,
        ..Default::default()
    }
}
