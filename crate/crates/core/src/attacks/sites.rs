//! Insertion points, in-scope variables, fresh names and the dead-expression
//! pool shared by the attack generators.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::minilang::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub ty: Type,
    pub constant: bool,
}

/// Position of a block: the function item plus the chain of
/// `(statement index, body index)` steps leading into nested bodies.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BlockPath {
    pub item: usize,
    pub steps: Vec<(usize, usize)>,
}

/// A statement boundary: inserting at `pos` places a statement before
/// `stmts[pos]`, or at the end of the block when `pos == stmts.len()`.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub block: BlockPath,
    pub pos: usize,
    /// Variables definitely declared at this point.
    pub vars: Vec<VarInfo>,
}

pub fn const_vars(ast: &Ast) -> Vec<VarInfo> {
    ast.consts()
        .map(|c| VarInfo {
            name: c.name.clone(),
            ty: c.ty,
            constant: true,
        })
        .collect()
}

pub fn bodies_mut(s: &mut Stmt) -> Vec<&mut Block> {
    match &mut s.kind {
        StmtKind::If {
            then_body, else_body, ..
        } => {
            let mut v = vec![then_body];
            if let Some(e) = else_body {
                v.push(e);
            }
            v
        }
        StmtKind::While { body, .. } => vec![body],
        _ => Vec::new(),
    }
}

pub fn bodies(s: &Stmt) -> Vec<&Block> {
    match &s.kind {
        StmtKind::If {
            then_body, else_body, ..
        } => {
            let mut v = vec![then_body];
            if let Some(e) = else_body {
                v.push(e);
            }
            v
        }
        StmtKind::While { body, .. } => vec![body],
        _ => Vec::new(),
    }
}

fn declared(s: &Stmt) -> Option<VarInfo> {
    match &s.kind {
        StmtKind::VarDecl { ty, name, .. } => Some(VarInfo {
            name: name.clone(),
            ty: *ty,
            constant: false,
        }),
        _ => None,
    }
}

/// Every statement boundary of every function, with the variables in scope.
pub fn boundaries(ast: &Ast) -> Vec<Boundary> {
    fn walk(b: &Block, path: BlockPath, env: &[VarInfo], out: &mut Vec<Boundary>) {
        let mut scope = env.to_vec();
        for (i, s) in b.stmts.iter().enumerate() {
            out.push(Boundary {
                block: path.clone(),
                pos: i,
                vars: scope.clone(),
            });
            for (k, body) in bodies(s).into_iter().enumerate() {
                let mut p = path.clone();
                p.steps.push((i, k));
                walk(body, p, &scope, out);
            }
            if let Some(v) = declared(s) {
                scope.retain(|x| x.name != v.name);
                scope.push(v);
            }
        }
        out.push(Boundary {
            block: path,
            pos: b.stmts.len(),
            vars: scope,
        });
    }
    let globals = const_vars(ast);
    let mut out = Vec::new();
    for (item, it) in ast.items.iter().enumerate() {
        if let Item::Func(f) = it {
            let mut env = globals.clone();
            for p in &f.params {
                env.retain(|x| x.name != p.name);
                env.push(VarInfo {
                    name: p.name.clone(),
                    ty: p.ty,
                    constant: false,
                });
            }
            walk(
                &f.body,
                BlockPath {
                    item,
                    steps: Vec::new(),
                },
                &env,
                &mut out,
            );
        }
    }
    out
}

pub fn block_mut<'a>(ast: &'a mut Ast, path: &BlockPath) -> &'a mut Block {
    let Item::Func(f) = &mut ast.items[path.item] else {
        panic!("block path must start at a function");
    };
    let mut b = &mut f.body;
    for &(i, k) in &path.steps {
        b = bodies_mut(&mut b.stmts[i]).swap_remove(k);
    }
    b
}

/// Static type of a call-free expression given variable types.
pub fn expr_type(e: &Expr, lookup: &dyn Fn(&str) -> Option<Type>) -> Option<Type> {
    match e {
        Expr::Int(_) | Expr::Read => Some(Type::Int),
        Expr::Bool(_) => Some(Type::Bool),
        Expr::Var(v) => lookup(v),
        Expr::Call { .. } => None,
        Expr::Unary { op: UnOp::Not, .. } => Some(Type::Bool),
        Expr::Unary { op: UnOp::Neg, .. } => Some(Type::Int),
        Expr::Binary { op, .. } => Some(op.result_type()),
    }
}

pub struct NameSource {
    taken: BTreeSet<String>,
    counter: usize,
}

const NAME_WORDS: &[&str] = &[
    "aux", "buf", "carry", "diff", "extra", "frac", "guard", "hold", "iter", "key", "mark", "norm", "offs", "part",
    "quot", "rest", "seed", "tally", "unit", "work",
];

impl NameSource {
    pub fn new(ast: &Ast) -> Self {
        NameSource {
            taken: ast.names(),
            counter: 0,
        }
    }

    pub fn fresh(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            self.counter += 1;
            let w = NAME_WORDS[rng.gen_range(0..NAME_WORDS.len())];
            let name = format!("{w}{}", self.counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    pub fn fresh_const(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let name = self.fresh(rng).to_uppercase();
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }
}

/// Pure, total expressions harvested from the victim, keyed by the variables
/// they read so they can be reused wherever those variables are in scope.
#[derive(Debug, Clone)]
pub struct Harvest {
    pub exprs: Vec<(Expr, Type, Vec<String>)>,
}

impl Harvest {
    pub fn from_ast(ast: &Ast) -> Self {
        let globals: HashMap<String, Type> = ast.consts().map(|c| (c.name.clone(), c.ty)).collect();
        let mut exprs = Vec::new();
        let mut seen = BTreeSet::new();
        for f in ast.functions() {
            let mut types = globals.clone();
            for p in &f.params {
                types.insert(p.name.clone(), p.ty);
            }
            walk_stmts(&f.body.stmts, &mut |s| {
                if let StmtKind::VarDecl { ty, name, .. } = &s.kind {
                    types.insert(name.clone(), *ty);
                }
            });
            walk_stmts(&f.body.stmts, &mut |s| {
                for e in s.own_exprs() {
                    collect_pure(e, &types, &mut exprs, &mut seen);
                }
            });
        }
        Harvest { exprs }
    }

    /// Harvested expressions whose variables are all in scope with the
    /// recorded types.
    pub fn usable(&self, vars: &[VarInfo]) -> Vec<&(Expr, Type, Vec<String>)> {
        self.exprs
            .iter()
            .filter(|(e, _, names)| {
                let lookup = |n: &str| vars.iter().find(|v| v.name == n).map(|v| v.ty);
                names.iter().all(|n| lookup(n).is_some()) && expr_type(e, &lookup).is_some() && typed_ok(e, &lookup)
            })
            .collect()
    }
}

/// Checks that every variable is used at the type its operator expects.
pub(crate) fn typed_ok(e: &Expr, lookup: &dyn Fn(&str) -> Option<Type>) -> bool {
    fn check(e: &Expr, want: Type, lookup: &dyn Fn(&str) -> Option<Type>) -> bool {
        match e {
            Expr::Int(_) => want == Type::Int,
            Expr::Bool(_) => want == Type::Bool,
            Expr::Var(v) => lookup(v) == Some(want),
            Expr::Read | Expr::Call { .. } => false,
            Expr::Unary { op: UnOp::Not, expr } => want == Type::Bool && check(expr, Type::Bool, lookup),
            Expr::Unary { op: UnOp::Neg, expr } => want == Type::Int && check(expr, Type::Int, lookup),
            Expr::Binary { op, lhs, rhs } => {
                if op.result_type() != want {
                    return false;
                }
                match op {
                    BinOp::And | BinOp::Or => check(lhs, Type::Bool, lookup) && check(rhs, Type::Bool, lookup),
                    BinOp::Eq | BinOp::Ne => {
                        (check(lhs, Type::Int, lookup) && check(rhs, Type::Int, lookup))
                            || (check(lhs, Type::Bool, lookup) && check(rhs, Type::Bool, lookup))
                    }
                    _ => check(lhs, Type::Int, lookup) && check(rhs, Type::Int, lookup),
                }
            }
        }
    }
    match expr_type(e, lookup) {
        Some(t) => check(e, t, lookup),
        None => false,
    }
}

fn collect_pure(
    e: &Expr,
    types: &HashMap<String, Type>,
    out: &mut Vec<(Expr, Type, Vec<String>)>,
    seen: &mut BTreeSet<String>,
) {
    let lookup = |n: &str| types.get(n).copied();
    if e.node_count() >= 3 && e.is_pure_total() && typed_ok(e, &lookup) {
        let key = render_expr(e);
        if seen.insert(key) {
            let mut names = BTreeSet::new();
            e.for_each_var(&mut |v| {
                names.insert(v.to_string());
            });
            let ty = expr_type(e, &lookup).expect("typed");
            out.push((e.clone(), ty, names.into_iter().collect()));
        }
    }
    match e {
        Expr::Unary { expr, .. } => collect_pure(expr, types, out, seen),
        Expr::Binary { lhs, rhs, .. } => {
            collect_pure(lhs, types, out, seen);
            collect_pure(rhs, types, out, seen);
        }
        Expr::Call { args, .. } => args.iter().for_each(|a| collect_pure(a, types, out, seen)),
        _ => {}
    }
}

pub const TEMPLATE_COUNT: usize = 20;

/// Instantiates dead-expression template `t` with in-scope variables,
/// falling back to literals when none of the needed type exist.
pub fn template(t: usize, vars: &[VarInfo], rng: &mut ChaCha8Rng) -> (Expr, Type) {
    let ints: Vec<&VarInfo> = vars.iter().filter(|v| v.ty == Type::Int).collect();
    let bools: Vec<&VarInfo> = vars.iter().filter(|v| v.ty == Type::Bool).collect();
    let int = |rng: &mut ChaCha8Rng| match ints.choose(rng) {
        Some(v) => Expr::var(&v.name),
        None => Expr::Int(rng.gen_range(1..30)),
    };
    let lit = |rng: &mut ChaCha8Rng| Expr::Int(rng.gen_range(2..10));
    let boolean = |rng: &mut ChaCha8Rng| match bools.choose(rng) {
        Some(v) => Expr::var(&v.name),
        None => Expr::Bool(rng.gen_bool(0.5)),
    };
    use BinOp::*;
    let b = Expr::binary;
    let e = match t % TEMPLATE_COUNT {
        0 => b(Add, int(rng), lit(rng)),
        1 => b(Mul, int(rng), lit(rng)),
        2 => b(Sub, int(rng), int(rng)),
        3 => b(Mul, b(Add, int(rng), int(rng)), lit(rng)),
        4 => b(Mod, int(rng), lit(rng)),
        5 => b(Div, int(rng), lit(rng)),
        6 => lit(rng),
        7 => {
            let v = int(rng);
            b(Mul, v.clone(), v)
        }
        8 => Expr::unary(UnOp::Neg, int(rng)),
        9 => b(Mul, b(Sub, int(rng), lit(rng)), int(rng)),
        10 => b(Add, b(Add, int(rng), int(rng)), lit(rng)),
        11 => b(Sub, b(Mul, int(rng), int(rng)), lit(rng)),
        12 => b(Lt, int(rng), int(rng)),
        13 => b(Eq, int(rng), lit(rng)),
        14 => b(Ne, int(rng), int(rng)),
        15 => Expr::unary(UnOp::Not, b(Gt, int(rng), lit(rng))),
        16 => {
            let v = int(rng);
            b(And, b(Ge, v.clone(), int(rng)), b(Lt, v, lit(rng)))
        }
        17 => b(Or, boolean(rng), b(Lt, int(rng), lit(rng))),
        18 => Expr::unary(UnOp::Not, boolean(rng)),
        _ => b(And, boolean(rng), b(Gt, int(rng), lit(rng))),
    };
    let ty = if t % TEMPLATE_COUNT < 12 { Type::Int } else { Type::Bool };
    (e, ty)
}

/// A dead declaration of a fresh variable, drawn from the templates or,
/// with probability 0.3 when available, from harvested victim expressions.
pub fn dead_decl(vars: &[VarInfo], harvest: &Harvest, names: &mut NameSource, rng: &mut ChaCha8Rng) -> Stmt {
    let usable = harvest.usable(vars);
    let (init, ty) = if !usable.is_empty() && rng.gen_bool(0.3) {
        let (e, t, _) = usable[rng.gen_range(0..usable.len())];
        (e.clone(), *t)
    } else {
        template(rng.gen_range(0..TEMPLATE_COUNT), vars, rng)
    };
    Stmt::new(StmtKind::VarDecl {
        ty,
        name: names.fresh(rng),
        init: Some(init),
    })
}

/// A self-assignment that leaves the variable's value unchanged, either bare
/// or duplicated into both branches of a pure condition. `None` if no
/// assignable variable is in scope.
pub fn identity_assign(vars: &[VarInfo], rng: &mut ChaCha8Rng) -> Option<Stmt> {
    let candidates: Vec<&VarInfo> = vars.iter().filter(|v| !v.constant).collect();
    let v = candidates.choose(rng)?;
    let x = Expr::var(&v.name);
    let value = match v.ty {
        Type::Int => match rng.gen_range(0..4) {
            0 => x,
            1 => Expr::binary(BinOp::Add, x, Expr::Int(0)),
            2 => Expr::binary(BinOp::Mul, x, Expr::Int(1)),
            _ => Expr::binary(BinOp::Sub, x, Expr::Int(0)),
        },
        Type::Bool => match rng.gen_range(0..3) {
            0 => x,
            1 => Expr::binary(BinOp::And, x, Expr::Bool(true)),
            _ => Expr::binary(BinOp::Or, x, Expr::Bool(false)),
        },
    };
    let assign = |value: Expr| {
        Stmt::new(StmtKind::Assign {
            name: v.name.clone(),
            value,
        })
    };
    if rng.gen_bool(0.5) {
        return Some(assign(value));
    }
    // Both branches perform the same no-op, so the pure guard is irrelevant.
    let (cond, _) = template(rng.gen_range(12..TEMPLATE_COUNT), vars, rng);
    Some(Stmt::new(StmtKind::If {
        cond,
        then_body: Block::new(vec![assign(value)]),
        else_body: Some(Block::new(vec![assign(Expr::var(&v.name))])),
    }))
}
