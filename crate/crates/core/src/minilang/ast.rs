use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Type {
    Int,
    Bool,
}

impl Type {
    pub fn keyword(self) -> &'static str {
        match self {
            Type::Int => "int",
            Type::Bool => "bool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter. All binary operators are
    /// left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }

    pub fn result_type(self) -> Type {
        match self {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => Type::Int,
            _ => Type::Bool,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Read,
    Call { name: String, args: Vec<Expr> },
    Unary { op: UnOp, expr: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn unary(op: UnOp, expr: Expr) -> Expr {
        Expr::Unary {
            op,
            expr: Box::new(expr),
        }
    }

    /// Visits every variable name read by this expression.
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Var(name) => f(name),
            Expr::Int(_) | Expr::Bool(_) | Expr::Read => {}
            Expr::Call { args, .. } => args.iter().for_each(|a| a.for_each_var(f)),
            Expr::Unary { expr, .. } => expr.for_each_var(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.for_each_var(f);
                rhs.for_each_var(f);
            }
        }
    }

    pub fn for_each_call<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Call { name, args } => {
                f(name);
                args.iter().for_each(|a| a.for_each_call(f));
            }
            Expr::Unary { expr, .. } => expr.for_each_call(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.for_each_call(f);
                rhs.for_each_call(f);
            }
            _ => {}
        }
    }

    pub fn contains_read(&self) -> bool {
        match self {
            Expr::Read => true,
            Expr::Call { args, .. } => args.iter().any(Expr::contains_read),
            Expr::Unary { expr, .. } => expr.contains_read(),
            Expr::Binary { lhs, rhs, .. } => lhs.contains_read() || rhs.contains_read(),
            _ => false,
        }
    }

    pub fn contains_call(&self) -> bool {
        match self {
            Expr::Call { .. } => true,
            Expr::Unary { expr, .. } => expr.contains_call(),
            Expr::Binary { lhs, rhs, .. } => lhs.contains_call() || rhs.contains_call(),
            _ => false,
        }
    }

    /// True if evaluating the expression may raise a division error.
    pub fn has_fallible_division(&self) -> bool {
        match self {
            Expr::Binary { op, lhs, rhs } => {
                let fallible = matches!(op, BinOp::Div | BinOp::Mod) && !matches!(**rhs, Expr::Int(d) if d != 0);
                fallible || lhs.has_fallible_division() || rhs.has_fallible_division()
            }
            Expr::Unary { expr, .. } => expr.has_fallible_division(),
            Expr::Call { args, .. } => args.iter().any(Expr::has_fallible_division),
            _ => false,
        }
    }

    /// No calls, no input, no division that can fail.
    pub fn is_pure_total(&self) -> bool {
        !self.contains_call() && !self.contains_read() && !self.has_fallible_division()
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Read => 1,
            Expr::Call { args, .. } => 1 + args.iter().map(Expr::node_count).sum::<usize>(),
            Expr::Unary { expr, .. } => 1 + expr.node_count(),
            Expr::Binary { lhs, rhs, .. } => 1 + lhs.node_count() + rhs.node_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub line: u32,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    VarDecl {
        ty: Type,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        name: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Block,
        else_body: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Return(Option<Expr>),
    Print(Expr),
}

/// A braced statement list; `close_line` is the line of its `}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub open_line: u32,
    pub close_line: u32,
    pub stmts: Vec<Stmt>,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block {
            open_line: 1,
            close_line: 1,
            stmts,
        }
    }
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { line: 1, kind }
    }

    /// Number of statements in this subtree, itself included.
    pub fn count(&self) -> usize {
        1 + match &self.kind {
            StmtKind::If {
                then_body, else_body, ..
            } => count_stmts(&then_body.stmts) + else_body.as_ref().map_or(0, |b| count_stmts(&b.stmts)),
            StmtKind::While { body, .. } => count_stmts(&body.stmts),
            _ => 0,
        }
    }

    /// Expressions evaluated by the statement itself (not its bodies).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::VarDecl { init, .. } => init.iter().collect(),
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Call { args, .. } => args.iter().collect(),
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Print(e) => vec![e],
        }
    }

    pub fn own_exprs_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            StmtKind::VarDecl { init, .. } => init.iter_mut().collect(),
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Call { args, .. } => args.iter_mut().collect(),
            StmtKind::Return(e) => e.iter_mut().collect(),
            StmtKind::Print(e) => vec![e],
        }
    }

    pub fn written_var(&self) -> Option<&str> {
        match &self.kind {
            StmtKind::VarDecl { name, .. } | StmtKind::Assign { name, .. } => Some(name),
            _ => None,
        }
    }
}

pub fn count_stmts(stmts: &[Stmt]) -> usize {
    stmts.iter().map(Stmt::count).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub ty: Type,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FnDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
    pub line: u32,
    pub file: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstDecl {
    pub ty: Type,
    pub name: String,
    pub value: Expr,
    pub line: u32,
    pub file: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Item {
    Const(ConstDecl),
    Func(FnDecl),
}

impl Item {
    pub fn file(&self) -> u32 {
        match self {
            Item::Const(c) => c.file,
            Item::Func(f) => f.file,
        }
    }
}

/// Parsed program: the items of all its files in file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ast {
    pub items: Vec<Item>,
}

impl Ast {
    pub fn functions(&self) -> impl Iterator<Item = &FnDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Func(f) => Some(f),
            _ => None,
        })
    }

    pub fn consts(&self) -> impl Iterator<Item = &ConstDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Const(c) => Some(c),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&FnDecl> {
        self.functions().find(|f| f.name == name)
    }

    /// Statements plus global constants.
    pub fn statement_count(&self) -> usize {
        self.items
            .iter()
            .map(|i| match i {
                Item::Const(_) => 1,
                Item::Func(f) => count_stmts(&f.body.stmts),
            })
            .sum()
    }

    /// Every identifier in use (functions, constants, parameters, locals).
    pub fn names(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        for item in &self.items {
            match item {
                Item::Const(c) => {
                    out.insert(c.name.clone());
                }
                Item::Func(f) => {
                    out.insert(f.name.clone());
                    for p in &f.params {
                        out.insert(p.name.clone());
                    }
                    walk_stmts(&f.body.stmts, &mut |s| {
                        if let Some(n) = s.written_var() {
                            out.insert(n.to_string());
                        }
                        for e in s.own_exprs() {
                            e.for_each_var(&mut |v| {
                                out.insert(v.to_string());
                            });
                        }
                    });
                }
            }
        }
        out
    }
}

/// Pre-order traversal over a statement list and all nested bodies.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match &s.kind {
            StmtKind::If {
                then_body, else_body, ..
            } => {
                walk_stmts(&then_body.stmts, f);
                if let Some(b) = else_body {
                    walk_stmts(&b.stmts, f);
                }
            }
            StmtKind::While { body, .. } => walk_stmts(&body.stmts, f),
            _ => {}
        }
    }
}

/// Mutable counterpart of [`walk_stmts`], visiting statements in the same order.
pub fn walk_stmts_mut(stmts: &mut [Stmt], f: &mut impl FnMut(&mut Stmt)) {
    for s in stmts {
        f(s);
        match &mut s.kind {
            StmtKind::If {
                then_body, else_body, ..
            } => {
                walk_stmts_mut(&mut then_body.stmts, f);
                if let Some(b) = else_body {
                    walk_stmts_mut(&mut b.stmts, f);
                }
            }
            StmtKind::While { body, .. } => walk_stmts_mut(&mut body.stmts, f),
            _ => {}
        }
    }
}

/// Mutable pre-order traversal over every statement list (block) in a body,
/// the outermost list first.
pub fn walk_blocks_mut(stmts: &mut Vec<Stmt>, f: &mut impl FnMut(&mut Vec<Stmt>)) {
    f(stmts);
    for s in stmts.iter_mut() {
        match &mut s.kind {
            StmtKind::If {
                then_body, else_body, ..
            } => {
                walk_blocks_mut(&mut then_body.stmts, f);
                if let Some(b) = else_body {
                    walk_blocks_mut(&mut b.stmts, f);
                }
            }
            StmtKind::While { body, .. } => walk_blocks_mut(&mut body.stmts, f),
            _ => {}
        }
    }
}
