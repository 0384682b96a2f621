//! Whole-program facts: per-function effect summaries, name resolution and
//! the static checks a program must pass before it is tokenized or run.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::ast::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FnSummary {
    pub side_effecting: bool,
    pub may_fail: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ProgramInfo {
    pub functions: BTreeMap<String, FnSummary>,
    /// Global constant names in declaration order.
    pub consts: Vec<String>,
}

impl ProgramInfo {
    /// Unknown callees are treated as both side-effecting and partial.
    pub fn summary(&self, name: &str) -> FnSummary {
        self.functions.get(name).copied().unwrap_or(FnSummary {
            side_effecting: true,
            may_fail: true,
        })
    }

    pub fn expr_side_effecting(&self, e: &Expr) -> bool {
        let mut se = e.contains_read();
        e.for_each_call(&mut |c| se |= self.summary(c).side_effecting);
        se
    }

    pub fn expr_may_fail(&self, e: &Expr) -> bool {
        let mut mf = e.has_fallible_division();
        e.for_each_call(&mut |c| mf |= self.summary(c).may_fail);
        mf
    }

    pub fn const_index(&self, name: &str) -> Option<u32> {
        self.consts.iter().position(|c| c == name).map(|i| i as u32)
    }
}

fn direct_calls(f: &FnDecl) -> BTreeSet<String> {
    let mut calls = BTreeSet::new();
    walk_stmts(&f.body.stmts, &mut |s| {
        if let StmtKind::Call { name, .. } = &s.kind {
            calls.insert(name.clone());
        }
        for e in s.own_exprs() {
            e.for_each_call(&mut |c| {
                calls.insert(c.to_string());
            });
        }
    });
    calls
}

fn local_summary(f: &FnDecl) -> FnSummary {
    let mut sum = FnSummary::default();
    walk_stmts(&f.body.stmts, &mut |s| {
        match &s.kind {
            StmtKind::Print(_) => sum.side_effecting = true,
            StmtKind::While { .. } => sum.may_fail = true,
            _ => {}
        }
        for e in s.own_exprs() {
            sum.side_effecting |= e.contains_read();
            sum.may_fail |= e.has_fallible_division();
        }
    });
    sum
}

pub fn analyze(ast: &Ast) -> ProgramInfo {
    let fns: Vec<&FnDecl> = ast.functions().collect();
    let index: HashMap<&str, usize> = fns.iter().enumerate().map(|(i, f)| (f.name.as_str(), i)).collect();

    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..fns.len()).map(|i| graph.add_node(i)).collect();
    let mut summaries: Vec<FnSummary> = fns.iter().map(|f| local_summary(f)).collect();
    let calls: Vec<BTreeSet<String>> = fns.iter().map(|f| direct_calls(f)).collect();

    for (i, cs) in calls.iter().enumerate() {
        for c in cs {
            match index.get(c.as_str()) {
                Some(&j) => {
                    graph.add_edge(nodes[i], nodes[j], ());
                }
                None => {
                    summaries[i].side_effecting = true;
                    summaries[i].may_fail = true;
                }
            }
        }
    }

    // Recursion: every member of a cycle is conservatively effectful.
    for scc in tarjan_scc(&graph) {
        let cyclic = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        if cyclic {
            for n in scc {
                let i = graph[n];
                summaries[i].side_effecting = true;
                summaries[i].may_fail = true;
            }
        }
    }

    // Propagate callee effects to callers until stable.
    loop {
        let mut changed = false;
        for i in 0..fns.len() {
            for c in &calls[i] {
                if let Some(&j) = index.get(c.as_str()) {
                    let callee = summaries[j];
                    let s = &mut summaries[i];
                    if callee.side_effecting && !s.side_effecting {
                        s.side_effecting = true;
                        changed = true;
                    }
                    if callee.may_fail && !s.may_fail {
                        s.may_fail = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    ProgramInfo {
        functions: fns.iter().zip(summaries).map(|(f, s)| (f.name.clone(), s)).collect(),
        consts: ast.consts().map(|c| c.name.clone()).collect(),
    }
}

/// Names a function treats as locals: parameters plus every declared or
/// assigned name that is not a global constant. Scoping is per function.
pub fn local_names(f: &FnDecl, consts: &[String]) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = f.params.iter().map(|p| p.name.clone()).collect();
    walk_stmts(&f.body.stmts, &mut |s| match &s.kind {
        StmtKind::VarDecl { name, .. } => {
            out.insert(name.clone());
        }
        StmtKind::Assign { name, .. } if !consts.contains(name) => {
            out.insert(name.clone());
        }
        _ => {}
    });
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticError {
    pub line: u32,
    pub message: String,
}

impl std::fmt::Display for SemanticError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.line, self.message)
    }
}

impl std::error::Error for SemanticError {}

/// Static checks: unique top-level names, unique parameters, literal constant
/// initializers and no assignment to constants.
pub fn validate(ast: &Ast) -> Result<(), SemanticError> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for item in &ast.items {
        let (name, line) = match item {
            Item::Const(c) => (c.name.as_str(), c.line),
            Item::Func(f) => (f.name.as_str(), f.line),
        };
        if !seen.insert(name) {
            return Err(SemanticError {
                line,
                message: format!("duplicate top-level name `{name}`"),
            });
        }
    }
    let consts: Vec<String> = ast.consts().map(|c| c.name.clone()).collect();
    for c in ast.consts() {
        let literal = match &c.value {
            Expr::Int(_) => c.ty == Type::Int,
            Expr::Bool(_) => c.ty == Type::Bool,
            Expr::Unary { op: UnOp::Neg, expr } => c.ty == Type::Int && matches!(**expr, Expr::Int(_)),
            _ => false,
        };
        if !literal {
            return Err(SemanticError {
                line: c.line,
                message: format!("constant `{}` needs a literal initializer of its type", c.name),
            });
        }
    }
    for f in ast.functions() {
        let mut params = BTreeSet::new();
        for p in &f.params {
            if !params.insert(p.name.as_str()) {
                return Err(SemanticError {
                    line: f.line,
                    message: format!("duplicate parameter `{}` in `{}`", p.name, f.name),
                });
            }
        }
        let mut err = None;
        let declared: BTreeSet<String> = {
            let mut d: BTreeSet<String> = params.iter().map(|s| s.to_string()).collect();
            walk_stmts(&f.body.stmts, &mut |s| {
                if let StmtKind::VarDecl { name, .. } = &s.kind {
                    d.insert(name.clone());
                }
            });
            d
        };
        walk_stmts(&f.body.stmts, &mut |s| {
            if let StmtKind::Assign { name, .. } = &s.kind {
                if consts.contains(name) && !declared.contains(name) && err.is_none() {
                    err = Some(SemanticError {
                        line: s.line,
                        message: format!("cannot assign to constant `{name}`"),
                    });
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_minilang;
    use super::*;

    #[test]
    fn effects_propagate_through_calls() {
        let ast = parse_minilang(
            "fn pure(int a) { return a * 2; }
             fn loud(int a) { print(a); return a; }
             fn relay(int a) { return loud(a) + pure(a); }
             fn divide(int a, int b) { return a / b; }
             fn main() { print(relay(1)); }",
        )
        .unwrap();
        let info = analyze(&ast);
        assert_eq!(info.summary("pure"), FnSummary::default());
        assert!(info.summary("loud").side_effecting);
        assert!(info.summary("relay").side_effecting);
        assert!(!info.summary("divide").side_effecting);
        assert!(info.summary("divide").may_fail);
        assert!(info.summary("nonexistent").side_effecting);
    }

    #[test]
    fn recursion_is_conservatively_effectful() {
        let ast = parse_minilang(
            "fn even(int n) { if (n == 0) { return true; } return odd(n - 1); }
             fn odd(int n) { if (n == 0) { return false; } return even(n - 1); }
             fn fact(int n) { if (n < 2) { return 1; } return n * fact(n - 1); }
             fn main() { print(even(4)); }",
        )
        .unwrap();
        let info = analyze(&ast);
        for f in ["even", "odd", "fact"] {
            let s = info.summary(f);
            assert!(s.side_effecting && s.may_fail, "{f}");
        }
    }

    #[test]
    fn validation_catches_bad_programs() {
        let dup = parse_minilang("fn f() {} fn f() {}").unwrap();
        assert!(validate(&dup).is_err());
        let assign_const = parse_minilang("const int K = 1; fn main() { K = 2; }").unwrap();
        assert!(validate(&assign_const).is_err());
        let bad_init = parse_minilang("const int K = 1 + 2; fn main() { }").unwrap();
        assert!(validate(&bad_init).is_err());
        let ok = parse_minilang("const int K = -1; fn main() { print(K); }").unwrap();
        assert!(validate(&ok).is_ok());
    }
}
