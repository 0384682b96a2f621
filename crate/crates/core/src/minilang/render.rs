//! Canonical pretty-printer. One statement per line, four-space indent; the
//! output re-parses to the same AST (modulo line numbers).

use std::fmt::Write;

use super::ast::*;

pub fn render(ast: &Ast) -> String {
    let mut out = String::new();
    for (i, item) in ast.items.iter().enumerate() {
        match item {
            Item::Const(c) => {
                let _ = writeln!(out, "const {} {} = {};", c.ty.keyword(), c.name, render_expr(&c.value));
            }
            Item::Func(f) => {
                if i > 0 {
                    out.push('\n');
                }
                let params: Vec<String> = f
                    .params
                    .iter()
                    .map(|p| format!("{} {}", p.ty.keyword(), p.name))
                    .collect();
                let _ = writeln!(out, "fn {}({}) {{", f.name, params.join(", "));
                render_stmts(&f.body.stmts, 1, &mut out);
                out.push_str("}\n");
            }
        }
    }
    out
}

/// Renders only the items that live in `file`.
pub fn render_file(ast: &Ast, file: u32) -> String {
    render(&Ast {
        items: ast.items.iter().filter(|i| i.file() == file).cloned().collect(),
    })
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn render_stmts(stmts: &[Stmt], level: usize, out: &mut String) {
    for s in stmts {
        render_stmt(s, level, out);
    }
}

fn render_stmt(s: &Stmt, level: usize, out: &mut String) {
    indent(level, out);
    match &s.kind {
        StmtKind::VarDecl { ty, name, init } => match init {
            Some(e) => {
                let _ = writeln!(out, "{} {} = {};", ty.keyword(), name, render_expr(e));
            }
            None => {
                let _ = writeln!(out, "{} {};", ty.keyword(), name);
            }
        },
        StmtKind::Assign { name, value } => {
            let _ = writeln!(out, "{} = {};", name, render_expr(value));
        }
        StmtKind::Call { name, args } => {
            let _ = writeln!(out, "{}({});", name, render_args(args));
        }
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", render_expr(e));
        }
        StmtKind::Print(e) => {
            let _ = writeln!(out, "print({});", render_expr(e));
        }
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => {
            let _ = writeln!(out, "if ({}) {{", render_expr(cond));
            render_stmts(&then_body.stmts, level + 1, out);
            indent(level, out);
            match else_body {
                Some(b) => {
                    out.push_str("} else {\n");
                    render_stmts(&b.stmts, level + 1, out);
                    indent(level, out);
                    out.push_str("}\n");
                }
                None => out.push_str("}\n"),
            }
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{", render_expr(cond));
            render_stmts(&body.stmts, level + 1, out);
            indent(level, out);
            out.push_str("}\n");
        }
    }
}

fn render_args(args: &[Expr]) -> String {
    args.iter().map(render_expr).collect::<Vec<_>>().join(", ")
}

pub fn render_expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) if *v < 0 => match v.checked_neg() {
            Some(p) => format!("-{p}"),
            // i64::MIN has no positive counterpart literal.
            None => format!("(-{} - 1)", i64::MAX),
        },
        Expr::Int(v) => v.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Var(n) => n.clone(),
        Expr::Read => "read()".to_string(),
        Expr::Call { name, args } => format!("{}({})", name, render_args(args)),
        Expr::Unary { op, expr } => {
            let inner = render_operand(expr, 7, false);
            match op {
                UnOp::Not => format!("!{inner}"),
                UnOp::Neg => format!("-{inner}"),
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            format!(
                "{} {} {}",
                render_operand(lhs, p, false),
                op.symbol(),
                render_operand(rhs, p, true)
            )
        }
    }
}

fn render_operand(e: &Expr, parent_prec: u8, right: bool) -> String {
    let needs_parens = match e {
        Expr::Binary { op, .. } => {
            let p = op.precedence();
            p < parent_prec || (right && p == parent_prec)
        }
        // Unary operands: keep `-(-x)` and negative literals unambiguous.
        Expr::Unary { .. } => parent_prec == 7,
        Expr::Int(v) => *v < 0,
        _ => false,
    };
    let s = render_expr(e);
    if needs_parens {
        format!("({s})")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_minilang;
    use super::*;

    fn strip_lines(ast: &mut Ast) {
        fn block(b: &mut Block) {
            b.open_line = 0;
            b.close_line = 0;
            for s in &mut b.stmts {
                s.line = 0;
                match &mut s.kind {
                    StmtKind::If {
                        then_body, else_body, ..
                    } => {
                        block(then_body);
                        if let Some(e) = else_body {
                            block(e);
                        }
                    }
                    StmtKind::While { body, .. } => block(body),
                    _ => {}
                }
            }
        }
        for item in &mut ast.items {
            match item {
                Item::Const(c) => c.line = 0,
                Item::Func(f) => {
                    f.line = 0;
                    block(&mut f.body);
                }
            }
        }
    }

    #[test]
    fn render_reparses_identically() {
        let src = "const int K = -3;\nfn g(int a, bool b) { if (b && !(a < 2)) { return a - (K - 1); } else { return -(-a); } }\nfn main() { int x = read(); bool f = x % 2 == 0 || x > 10; while (x > 0) { x = x - 1; print(g(x, f)); } g(1, true); }";
        let mut a = parse_minilang(src).unwrap();
        let text = render(&a);
        let mut b = parse_minilang(&text).unwrap();
        strip_lines(&mut a);
        strip_lines(&mut b);
        assert_eq!(a, b, "{text}");
    }

    #[test]
    fn negative_literal_operands_are_parenthesized() {
        let e = Expr::binary(BinOp::Sub, Expr::Int(1), Expr::Int(-2));
        assert_eq!(render_expr(&e), "1 - (-2)");
    }
}
