//! Offline transports with canned behavior, for tests and dry runs.

use std::collections::BTreeMap;

use plagguard_core::minilang::{parse_minilang, render, walk_stmts_mut, Ast, Expr, Item, StmtKind};

use crate::extract::extract_code;
use crate::transport::{ChatRequest, ChatTransport, LlmError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fixture {
    /// Returns the code found in the prompt unchanged.
    Echo,
    /// Returns the prompt's code with every identifier except `main` renamed.
    Rename,
    /// Returns prose without any code.
    Prose,
    /// Cycles through the given replies.
    Canned(Vec<String>),
    /// Fails every request with the given HTTP status.
    Status(u16),
    /// Fails transiently `n` times, then echoes.
    FlakyEcho(usize),
}

pub struct FixtureTransport {
    pub fixture: Fixture,
    pub calls: usize,
}

impl FixtureTransport {
    pub fn new(fixture: Fixture) -> Self {
        FixtureTransport { fixture, calls: 0 }
    }
}

fn prompt_code(request: &ChatRequest) -> Option<String> {
    request.messages.last().and_then(|m| extract_code(&m.content))
}

fn fenced(code: &str) -> String {
    format!("Here is the rewritten program:\n\n```\n{}```\n", code)
}

impl ChatTransport for FixtureTransport {
    fn send(&mut self, request: &ChatRequest) -> Result<String, LlmError> {
        self.calls += 1;
        match &self.fixture {
            Fixture::Echo => Ok(fenced(&prompt_code(request).unwrap_or_default())),
            Fixture::FlakyEcho(n) => {
                if self.calls <= *n {
                    Err(LlmError::Transient("HTTP 503".into()))
                } else {
                    Ok(fenced(&prompt_code(request).unwrap_or_default()))
                }
            }
            Fixture::Rename => {
                let code = prompt_code(request).unwrap_or_default();
                match parse_minilang(&code) {
                    Ok(mut ast) => {
                        rename_identifiers(&mut ast);
                        Ok(fenced(&render(&ast)))
                    }
                    Err(_) => Ok(fenced(&code)),
                }
            }
            Fixture::Prose => Ok("I am sorry, but I would rather explain the idea in words than write code.".into()),
            Fixture::Canned(replies) => {
                if replies.is_empty() {
                    return Ok(String::new());
                }
                Ok(replies[(self.calls - 1) % replies.len()].clone())
            }
            Fixture::Status(s) => crate::transport::classify(*s, None, "fixture failure"),
        }
    }
}

/// Consistently renames every function (except `main`), constant, parameter
/// and local to `id<N>` / `ID<N>` names in order of first appearance.
pub fn rename_identifiers(ast: &mut Ast) {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for name in ast.names() {
        if name == "main" {
            continue;
        }
        let fresh = if name.chars().all(|c| !c.is_ascii_lowercase()) {
            format!("ID{}", map.len())
        } else {
            format!("id{}", map.len())
        };
        map.insert(name, fresh);
    }
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
    for item in &mut ast.items {
        match item {
            Item::Const(c) => ren(&mut c.name),
            Item::Func(f) => {
                ren(&mut f.name);
                f.params.iter_mut().for_each(|p| ren(&mut p.name));
                walk_stmts_mut(&mut f.body.stmts, &mut |s| {
                    for e in s.own_exprs_mut() {
                        expr(e, &ren);
                    }
                    match &mut s.kind {
                        StmtKind::VarDecl { name, .. }
                        | StmtKind::Assign { name, .. }
                        | StmtKind::Call { name, .. } => ren(name),
                        _ => {}
                    }
                });
            }
        }
    }
}
