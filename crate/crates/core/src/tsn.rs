//! Token sequence normalization.
//!
//! Statement groups become nodes of a token normalization graph (TNG) whose
//! edges record which statements must keep their relative order. Dead
//! statements are removed and the rest is re-linearized with a content-based
//! topological sort, so inserted dead code and reordered independent
//! statements both disappear from the token sequence.
//!
//! Ordering is scoped: a control statement's body is a nested sub-graph and
//! its statements only ever move among their siblings. For edge computation a
//! control statement stands for its whole subtree.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::tokenize_ast;
use crate::minilang::{Ast, Block, ConstDecl, FnDecl, Item, Stmt, StmtKind};
use crate::token::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TsnError {
    #[error("token sequence carries no statement semantics")]
    MissingSemantics,
    #[error("token sequence does not match its statement groups at token {0}")]
    Malformed(usize),
    #[error("ordering constraints form a cycle")]
    CycleDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Data,
    Order,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TngEdge {
    pub from: StmtId,
    pub to: StmtId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TngNode {
    pub stmt_id: StmtId,
    pub kind: GroupKind,
    /// Header tokens of the statement (its group span).
    pub tokens: Vec<Token>,
    pub function: Option<u32>,
    pub reads: Vec<Symbol>,
    pub writes: Vec<Symbol>,
    pub side_effecting: bool,
    pub may_fail: bool,
    pub has_return: bool,
    pub critical: bool,
}

impl TngNode {
    /// Statements that other statements may not be moved across.
    fn barrier(&self) -> bool {
        self.side_effecting || self.may_fail || self.has_return
    }
}

/// Nesting skeleton with the structural tokens needed to re-emit it.
#[derive(Debug, Clone, PartialEq, Eq)]
enum LayoutItem {
    Const(StmtId),
    Func {
        begin: Token,
        body: LayoutBlock,
        end: Token,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LayoutBlock {
    open: Token,
    stmts: Vec<LayoutStmt>,
    close: Token,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LayoutStmt {
    id: StmtId,
    /// Bodies, each with an optional leading token (`ELSE_BEGIN`).
    bodies: Vec<(Option<Token>, LayoutBlock)>,
    end: Option<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenNormalizationGraph {
    pub program_id: String,
    pub nodes: BTreeMap<StmtId, TngNode>,
    pub edges: BTreeSet<TngEdge>,
    layout: Vec<LayoutItem>,
}

struct LayoutParser<'a> {
    tokens: &'a [Token],
    groups: &'a [StatementGroup],
    pos: usize,
}

impl LayoutParser<'_> {
    fn expect(&mut self, kind: TokenType) -> Result<Token, TsnError> {
        match self.tokens.get(self.pos) {
            Some(t) if t.kind == kind && t.stmt_id.is_none() => {
                self.pos += 1;
                Ok(*t)
            }
            _ => Err(TsnError::Malformed(self.pos)),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn group_at(&self) -> Result<&StatementGroup, TsnError> {
        let id = self
            .peek()
            .and_then(|t| t.stmt_id)
            .ok_or(TsnError::Malformed(self.pos))?;
        let g = self
            .groups
            .get(id.0 as usize)
            .filter(|g| g.stmt_id == id && g.token_span.0 == self.pos)
            .ok_or(TsnError::Malformed(self.pos))?;
        if g.token_span.1 > self.tokens.len() || g.token_span.1 <= g.token_span.0 {
            return Err(TsnError::Malformed(self.pos));
        }
        Ok(g)
    }

    fn items(&mut self) -> Result<Vec<LayoutItem>, TsnError> {
        let mut items = Vec::new();
        while let Some(t) = self.peek() {
            if t.kind == TokenType::FuncBegin && t.stmt_id.is_none() {
                let begin = self.expect(TokenType::FuncBegin)?;
                let body = self.block()?;
                let end = self.expect(TokenType::FuncEnd)?;
                items.push(LayoutItem::Func { begin, body, end });
            } else {
                let g = self.group_at()?;
                if g.kind != GroupKind::Const {
                    return Err(TsnError::Malformed(self.pos));
                }
                items.push(LayoutItem::Const(g.stmt_id));
                self.pos = g.token_span.1;
            }
        }
        Ok(items)
    }

    fn block(&mut self) -> Result<LayoutBlock, TsnError> {
        let open = self.expect(TokenType::BlockBegin)?;
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.kind == TokenType::BlockEnd && t.stmt_id.is_none() => break,
                Some(_) => stmts.push(self.stmt()?),
                None => return Err(TsnError::Malformed(self.pos)),
            }
        }
        let close = self.expect(TokenType::BlockEnd)?;
        Ok(LayoutBlock { open, stmts, close })
    }

    fn stmt(&mut self) -> Result<LayoutStmt, TsnError> {
        let g = self.group_at()?;
        let (id, kind) = (g.stmt_id, g.kind);
        self.pos = g.token_span.1;
        let mut bodies = Vec::new();
        let mut end = None;
        match kind {
            GroupKind::If { has_else } => {
                bodies.push((None, self.block()?));
                if has_else {
                    let e = self.expect(TokenType::ElseBegin)?;
                    bodies.push((Some(e), self.block()?));
                }
                end = Some(self.expect(TokenType::IfEnd)?);
            }
            GroupKind::While => {
                bodies.push((None, self.block()?));
                end = Some(self.expect(TokenType::LoopEnd)?);
            }
            GroupKind::Const => return Err(TsnError::Malformed(self.pos)),
            _ => {}
        }
        Ok(LayoutStmt { id, bodies, end })
    }
}

fn sibling_scopes(layout: &[LayoutItem]) -> Vec<Vec<&LayoutStmt>> {
    fn walk<'a>(b: &'a LayoutBlock, out: &mut Vec<Vec<&'a LayoutStmt>>) {
        out.push(b.stmts.iter().collect());
        for s in &b.stmts {
            for (_, body) in &s.bodies {
                walk(body, out);
            }
        }
    }
    let mut out = Vec::new();
    for item in layout {
        if let LayoutItem::Func { body, .. } = item {
            walk(body, &mut out);
        }
    }
    out
}

#[derive(Default)]
struct Summary {
    reads: BTreeSet<Symbol>,
    writes: BTreeSet<Symbol>,
}

fn summarize(s: &LayoutStmt, nodes: &BTreeMap<StmtId, TngNode>) -> Summary {
    let mut sum = Summary::default();
    fn go(s: &LayoutStmt, nodes: &BTreeMap<StmtId, TngNode>, sum: &mut Summary) {
        let n = &nodes[&s.id];
        sum.reads.extend(n.reads.iter().copied());
        sum.writes.extend(n.writes.iter().copied());
        for (_, b) in &s.bodies {
            for c in &b.stmts {
                go(c, nodes, sum);
            }
        }
    }
    go(s, nodes, &mut sum);
    sum
}

fn compute_edges(layout: &[LayoutItem], nodes: &BTreeMap<StmtId, TngNode>) -> BTreeSet<TngEdge> {
    let mut edges = BTreeSet::new();
    for scope in sibling_scopes(layout) {
        let sums: Vec<Summary> = scope.iter().map(|s| summarize(s, nodes)).collect();
        for u in 0..scope.len() {
            for v in u + 1..scope.len() {
                let (su, sv) = (&sums[u], &sums[v]);
                let flow = !su.writes.is_disjoint(&sv.reads);
                let conflict = flow || !su.reads.is_disjoint(&sv.writes) || !su.writes.is_disjoint(&sv.writes);
                if conflict {
                    edges.insert(TngEdge {
                        from: scope[u].id,
                        to: scope[v].id,
                        kind: if flow { EdgeKind::Data } else { EdgeKind::Order },
                    });
                }
            }
        }
        let barriers: Vec<StmtId> = scope.iter().map(|s| s.id).filter(|id| nodes[id].barrier()).collect();
        for w in barriers.windows(2) {
            let already = edges.iter().any(|e| e.from == w[0] && e.to == w[1]);
            if !already {
                edges.insert(TngEdge {
                    from: w[0],
                    to: w[1],
                    kind: EdgeKind::Order,
                });
            }
        }
        for s in &scope {
            for (_, b) in &s.bodies {
                for c in &b.stmts {
                    edges.insert(TngEdge {
                        from: s.id,
                        to: c.id,
                        kind: EdgeKind::Control,
                    });
                }
            }
        }
    }
    edges
}

pub fn build_tng(enriched: &EnrichedSequence) -> Result<TokenNormalizationGraph, TsnError> {
    if !enriched.has_semantics() {
        return Err(TsnError::MissingSemantics);
    }
    let tokens = &enriched.sequence.tokens;
    let mut parser = LayoutParser {
        tokens,
        groups: &enriched.groups,
        pos: 0,
    };
    let layout = parser.items()?;
    let nodes: BTreeMap<StmtId, TngNode> = enriched
        .groups
        .iter()
        .map(|g| {
            let node = TngNode {
                stmt_id: g.stmt_id,
                kind: g.kind,
                tokens: tokens[g.token_span.0..g.token_span.1].to_vec(),
                function: g.function,
                reads: g.reads.clone(),
                writes: g.writes.clone(),
                side_effecting: g.side_effecting,
                may_fail: g.may_fail,
                has_return: g.has_return,
                critical: g.side_effecting || g.may_fail || g.has_return || g.kind.is_control(),
            };
            (g.stmt_id, node)
        })
        .collect();
    let edges = compute_edges(&layout, &nodes);
    Ok(TokenNormalizationGraph {
        program_id: enriched.sequence.program_id.clone(),
        nodes,
        edges,
        layout,
    })
}

/// Keeps critical statements and every simple statement whose written
/// variable is (transitively) read by a kept statement. Relevance is tracked
/// per function and ignores statement order, which keeps loop-carried
/// definitions alive. Constants survive only if a kept statement reads them.
pub fn remove_dead_nodes(g: &TokenNormalizationGraph) -> TokenNormalizationGraph {
    let key = |f: Option<u32>, s: Symbol| match s {
        Symbol::Global(_) => (None, s),
        Symbol::Local(_) => (f, s),
    };
    let mut relevant: BTreeSet<(Option<u32>, Symbol)> = BTreeSet::new();
    let mut live: BTreeSet<StmtId> = BTreeSet::new();
    for n in g.nodes.values() {
        if n.critical {
            live.insert(n.stmt_id);
            relevant.extend(n.reads.iter().map(|&s| key(n.function, s)));
        }
    }
    loop {
        let mut changed = false;
        for n in g.nodes.values() {
            if live.contains(&n.stmt_id) {
                continue;
            }
            if n.writes.iter().any(|&w| relevant.contains(&key(n.function, w))) {
                live.insert(n.stmt_id);
                relevant.extend(n.reads.iter().map(|&s| key(n.function, s)));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    fn prune(b: &LayoutBlock, live: &BTreeSet<StmtId>) -> LayoutBlock {
        LayoutBlock {
            open: b.open,
            close: b.close,
            stmts: b
                .stmts
                .iter()
                .filter(|s| live.contains(&s.id))
                .map(|s| LayoutStmt {
                    id: s.id,
                    bodies: s.bodies.iter().map(|(t, b)| (*t, prune(b, live))).collect(),
                    end: s.end,
                })
                .collect(),
        }
    }
    let layout: Vec<LayoutItem> = g
        .layout
        .iter()
        .filter_map(|item| match item {
            LayoutItem::Const(id) => live.contains(id).then_some(LayoutItem::Const(*id)),
            LayoutItem::Func { begin, body, end } => Some(LayoutItem::Func {
                begin: *begin,
                body: prune(body, &live),
                end: *end,
            }),
        })
        .collect();
    let nodes: BTreeMap<StmtId, TngNode> = g
        .nodes
        .iter()
        .filter(|(id, _)| live.contains(id))
        .map(|(id, n)| (*id, n.clone()))
        .collect();
    let edges = compute_edges(&layout, &nodes);
    TokenNormalizationGraph {
        program_id: g.program_id.clone(),
        nodes,
        edges,
        layout,
    }
}

/// Weisfeiler-Lehman colors over the statement/variable graph of each
/// function. Initial colors carry no identifier or position information, so
/// the result is invariant under renaming and under reordering that the graph
/// allows.
fn wl_colors(g: &TokenNormalizationGraph) -> HashMap<StmtId, u32> {
    const ROUNDS: usize = 3;
    #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
    enum Vertex {
        Stmt(StmtId),
        Var(Option<u32>, Symbol),
    }
    // Edge labels: 0 reads, 1 writes, 2 data, 3 order, 4 control; +8 when
    // seen from the other endpoint.
    let mut adj: BTreeMap<Vertex, Vec<(u8, Vertex)>> = BTreeMap::new();
    let var = |f: Option<u32>, s: Symbol| match s {
        Symbol::Global(_) => Vertex::Var(None, s),
        Symbol::Local(_) => Vertex::Var(f, s),
    };
    for n in g.nodes.values() {
        let sv = Vertex::Stmt(n.stmt_id);
        adj.entry(sv).or_default();
        for (label, syms) in [(0u8, &n.reads), (1u8, &n.writes)] {
            for &s in syms {
                let vv = var(n.function, s);
                adj.entry(sv).or_default().push((label, vv));
                adj.entry(vv).or_default().push((label + 8, sv));
            }
        }
    }
    for e in &g.edges {
        let label = match e.kind {
            EdgeKind::Data => 2,
            EdgeKind::Order => 3,
            EdgeKind::Control => 4,
        };
        adj.entry(Vertex::Stmt(e.from))
            .or_default()
            .push((label, Vertex::Stmt(e.to)));
        adj.entry(Vertex::Stmt(e.to))
            .or_default()
            .push((label + 8, Vertex::Stmt(e.from)));
    }

    let initial = |v: &Vertex| -> Vec<u32> {
        match v {
            Vertex::Stmt(id) => {
                let n = &g.nodes[id];
                let mut c: Vec<u32> = vec![0];
                c.extend(n.tokens.iter().map(|t| t.kind as u32));
                c.push(n.side_effecting as u32);
                c.push(n.may_fail as u32);
                c.push(n.has_return as u32);
                c
            }
            Vertex::Var(_, Symbol::Local(_)) => vec![1],
            Vertex::Var(_, Symbol::Global(_)) => vec![2],
        }
    };
    let relabel = |sigs: BTreeMap<Vertex, Vec<u32>>| -> BTreeMap<Vertex, u32> {
        let distinct: BTreeSet<&Vec<u32>> = sigs.values().collect();
        let rank: HashMap<&Vec<u32>, u32> = distinct.into_iter().enumerate().map(|(i, s)| (s, i as u32)).collect();
        sigs.iter().map(|(v, s)| (*v, rank[s])).collect()
    };

    let mut colors = relabel(adj.keys().map(|v| (*v, initial(v))).collect());
    for _ in 0..ROUNDS {
        let sigs = adj
            .iter()
            .map(|(v, ns)| {
                let mut neigh: Vec<(u8, u32)> = ns.iter().map(|(l, u)| (*l, colors[u])).collect();
                neigh.sort_unstable();
                let mut sig = vec![colors[v]];
                for (l, c) in neigh {
                    sig.push(l as u32);
                    sig.push(c);
                }
                (*v, sig)
            })
            .collect();
        colors = relabel(sigs);
    }
    colors
        .into_iter()
        .filter_map(|(v, c)| match v {
            Vertex::Stmt(id) => Some((id, c)),
            Vertex::Var(..) => None,
        })
        .collect()
}

/// Order in which statements of one scope are emitted.
#[derive(Debug, Clone, PartialEq, Eq)]
struct OrderedStmt {
    id: StmtId,
    bodies: Vec<Vec<OrderedStmt>>,
}

struct Linearizer<'a> {
    g: &'a TokenNormalizationGraph,
    wl: HashMap<StmtId, u32>,
}

impl Linearizer<'_> {
    fn subtree_types(&self, s: &LayoutStmt, ordered: &OrderedStmt, out: &mut Vec<TokenType>) {
        out.extend(self.g.nodes[&s.id].tokens.iter().map(|t| t.kind));
        for ((prefix, b), body) in s.bodies.iter().zip(&ordered.bodies) {
            if let Some(p) = prefix {
                out.push(p.kind);
            }
            out.push(TokenType::BlockBegin);
            let by_id: HashMap<StmtId, &LayoutStmt> = b.stmts.iter().map(|c| (c.id, c)).collect();
            for c in body {
                self.subtree_types(by_id[&c.id], c, out);
            }
            out.push(TokenType::BlockEnd);
        }
        if let Some(e) = s.end {
            out.push(e.kind);
        }
    }

    fn scope(&self, b: &LayoutBlock) -> Result<Vec<OrderedStmt>, TsnError> {
        let n = b.stmts.len();
        let ordered_children: Vec<OrderedStmt> = b
            .stmts
            .iter()
            .map(|s| {
                Ok(OrderedStmt {
                    id: s.id,
                    bodies: s
                        .bodies
                        .iter()
                        .map(|(_, body)| self.scope(body))
                        .collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<_, TsnError>>()?;
        let index: HashMap<StmtId, usize> = b.stmts.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for e in &self.g.edges {
            if e.kind == EdgeKind::Control {
                continue;
            }
            if let (Some(&u), Some(&v)) = (index.get(&e.from), index.get(&e.to)) {
                if !succ[u].contains(&v) {
                    succ[u].push(v);
                    indeg[v] += 1;
                }
            }
        }
        let keys: Vec<(Vec<TokenType>, std::cmp::Reverse<usize>, u32, usize)> = (0..n)
            .map(|i| {
                let mut types = Vec::new();
                self.subtree_types(&b.stmts[i], &ordered_children[i], &mut types);
                (
                    types,
                    std::cmp::Reverse(succ[i].len()),
                    self.wl.get(&b.stmts[i].id).copied().unwrap_or(0),
                    i,
                )
            })
            .collect();
        let mut ready: BTreeSet<&(Vec<TokenType>, std::cmp::Reverse<usize>, u32, usize)> =
            (0..n).filter(|&i| indeg[i] == 0).map(|i| &keys[i]).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(k) = ready.pop_first() {
            let i = k.3;
            order.push(ordered_children[i].clone());
            for &v in &succ[i] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.insert(&keys[v]);
                }
            }
        }
        if order.len() != n {
            return Err(TsnError::CycleDetected);
        }
        Ok(order)
    }
}

fn emit_block(g: &TokenNormalizationGraph, b: &LayoutBlock, order: &[OrderedStmt], out: &mut Vec<Token>) {
    out.push(b.open);
    let by_id: HashMap<StmtId, &LayoutStmt> = b.stmts.iter().map(|s| (s.id, s)).collect();
    for o in order {
        let s = by_id[&o.id];
        out.extend(g.nodes[&s.id].tokens.iter().copied());
        for ((prefix, body), body_order) in s.bodies.iter().zip(&o.bodies) {
            if let Some(p) = prefix {
                out.push(*p);
            }
            emit_block(g, body, body_order, out);
        }
        if let Some(e) = s.end {
            out.push(e);
        }
    }
    out.push(b.close);
}

enum OrderedItem {
    Const(StmtId),
    Func(Vec<OrderedStmt>),
}

fn plan(g: &TokenNormalizationGraph) -> Result<Vec<OrderedItem>, TsnError> {
    let lin = Linearizer { g, wl: wl_colors(g) };
    g.layout
        .iter()
        .map(|item| match item {
            LayoutItem::Const(id) => Ok(OrderedItem::Const(*id)),
            LayoutItem::Func { body, .. } => Ok(OrderedItem::Func(lin.scope(body)?)),
        })
        .collect()
}

/// Content-ordered topological sort of every scope, emitted as tokens.
pub fn linearize(g: &TokenNormalizationGraph) -> Result<TokenSequence, TsnError> {
    let plan = plan(g)?;
    let mut out = Vec::new();
    for (item, ordered) in g.layout.iter().zip(&plan) {
        match (item, ordered) {
            (LayoutItem::Const(id), _) => out.extend(g.nodes[id].tokens.iter().copied()),
            (LayoutItem::Func { begin, body, end }, OrderedItem::Func(order)) => {
                out.push(*begin);
                emit_block(g, body, order, &mut out);
                out.push(*end);
            }
            (LayoutItem::Func { .. }, OrderedItem::Const(_)) => unreachable!("plan mirrors layout"),
        }
    }
    Ok(TokenSequence::new(g.program_id.clone(), out))
}

pub fn normalize(enriched: &EnrichedSequence) -> Result<TokenSequence, TsnError> {
    linearize(&remove_dead_nodes(&build_tng(enriched)?))
}

/// Applies normalization at the source level: dead statements are dropped
/// and every block is reordered as [`normalize`] orders its tokens.
pub fn normalize_program(ast: &Ast) -> Result<Ast, TsnError> {
    let enriched = tokenize_ast("normalize", ast);
    if !enriched.has_semantics() {
        return Ok(ast.clone());
    }
    let g = remove_dead_nodes(&build_tng(&enriched)?);
    let plan = plan(&g)?;

    // Statement ids number constants and function statements in one
    // pre-order sequence.
    let mut table: Vec<Option<&Stmt>> = Vec::new();
    let mut const_by_slot: HashMap<StmtId, &ConstDecl> = HashMap::new();
    for item in &ast.items {
        match item {
            Item::Const(c) => {
                const_by_slot.insert(StmtId(table.len() as u32), c);
                table.push(None);
            }
            Item::Func(f) => crate::minilang::walk_stmts(&f.body.stmts, &mut |s| table.push(Some(s))),
        }
    }

    fn rebuild(order: &[OrderedStmt], table: &[Option<&Stmt>], template: &Block) -> Block {
        Block {
            open_line: template.open_line,
            close_line: template.close_line,
            stmts: order.iter().map(|o| rebuild_stmt(o, table)).collect(),
        }
    }
    fn rebuild_stmt(o: &OrderedStmt, table: &[Option<&Stmt>]) -> Stmt {
        let s = table[o.id.0 as usize].expect("statement id maps to a statement");
        let kind = match &s.kind {
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => StmtKind::If {
                cond: cond.clone(),
                then_body: rebuild(&o.bodies[0], table, then_body),
                else_body: else_body.as_ref().map(|b| rebuild(&o.bodies[1], table, b)),
            },
            StmtKind::While { cond, body } => StmtKind::While {
                cond: cond.clone(),
                body: rebuild(&o.bodies[0], table, body),
            },
            other => other.clone(),
        };
        Stmt { line: s.line, kind }
    }

    let mut items = Vec::new();
    let mut funcs = ast.functions();
    for ordered in &plan {
        match ordered {
            OrderedItem::Const(id) => items.push(Item::Const(const_by_slot[id].clone())),
            OrderedItem::Func(order) => {
                let f: &FnDecl = funcs.next().expect("plan mirrors functions");
                items.push(Item::Func(FnDecl {
                    body: rebuild(order, &table, &f.body),
                    ..f.clone()
                }));
            }
        }
    }
    Ok(Ast { items })
}

impl TokenNormalizationGraph {
    /// Line-oriented dump: one `node` line per statement, one `edge` line per
    /// edge.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph {}", self.program_id);
        for n in self.nodes.values() {
            let tags: Vec<&str> = n.tokens.iter().map(|t| t.kind.tag()).collect();
            let syms = |v: &[Symbol]| {
                v.iter()
                    .map(|s| match s {
                        Symbol::Local(i) => format!("l{i}"),
                        Symbol::Global(i) => format!("g{i}"),
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let _ = writeln!(
                out,
                "node {} tokens={} reads={} writes={} critical={}",
                n.stmt_id.0,
                tags.join(","),
                syms(&n.reads),
                syms(&n.writes),
                n.critical
            );
        }
        for e in &self.edges {
            let kind = match e.kind {
                EdgeKind::Data => "data",
                EdgeKind::Order => "order",
                EdgeKind::Control => "control",
            };
            let _ = writeln!(out, "edge {} {} {}", e.from.0, e.to.0, kind);
        }
        out
    }
}
