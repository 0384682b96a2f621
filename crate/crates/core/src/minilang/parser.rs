//! Hand-written lexer and recursive-descent parser for MiniLang.

use std::fmt;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub file: Option<String>,
    pub line: u32,
    pub column: u32,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
        }
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.line,
            self.column,
            self.expected.join(" or "),
            self.found
        )
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Kw(&'static str),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(v) => write!(f, "integer `{v}`"),
            Tok::Kw(k) | Tok::Punct(k) => write!(f, "`{k}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "fn", "int", "bool", "const", "if", "else", "while", "return", "print", "read", "true", "false",
];

// Longest first so that `<=` wins over `<`.
const PUNCT: &[&str] = &[
    "<=", ">=", "==", "!=", "&&", "||", "(", ")", "{", "}", ",", ";", "=", "+", "-", "*", "/", "%", "<", ">", "!",
];

#[derive(Debug, Clone)]
struct Lexed {
    tok: Tok,
    line: u32,
    column: u32,
}

fn lex(src: &str) -> Result<Vec<Lexed>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            col += (i - start) as u32;
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word.to_string()),
            };
            out.push(Lexed {
                tok,
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            col += (i - start) as u32;
            let value = src[start..i].parse::<i64>().map_err(|_| SyntaxError {
                file: None,
                line: start_line,
                column: start_col,
                expected: vec!["integer literal within 64 bits".into()],
                found: format!("`{}`", &src[start..i]),
            })?;
            out.push(Lexed {
                tok: Tok::Int(value),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        match PUNCT.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len() as u32;
                out.push(Lexed {
                    tok: Tok::Punct(p),
                    line: start_line,
                    column: start_col,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(SyntaxError {
                    file: None,
                    line,
                    column: col,
                    expected: vec!["token".into()],
                    found: format!("character `{ch}`"),
                });
            }
        }
    }
    out.push(Lexed {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    file: u32,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn line(&self) -> u32 {
        self.toks[self.pos].line
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let cur = &self.toks[self.pos];
        Err(SyntaxError {
            file: None,
            line: cur.line,
            column: cur.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: cur.tok.to_string(),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(q) if *q == k)
    }

    fn expect_punct(&mut self, p: &'static str) -> PResult<()> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{p}`")])
        }
    }

    fn expect_kw(&mut self, k: &'static str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{k}`")])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(_) => match self.bump() {
                Tok::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => self.error(&["identifier"]),
        }
    }

    fn ty(&mut self) -> PResult<Type> {
        if self.is_kw("int") {
            self.bump();
            Ok(Type::Int)
        } else if self.is_kw("bool") {
            self.bump();
            Ok(Type::Bool)
        } else {
            self.error(&["`int`", "`bool`"])
        }
    }

    fn program(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Kw("fn") => items.push(Item::Func(self.fn_decl()?)),
                Tok::Kw("const") => items.push(Item::Const(self.const_decl()?)),
                _ => return self.error(&["`fn`", "`const`"]),
            }
        }
        Ok(items)
    }

    fn const_decl(&mut self) -> PResult<ConstDecl> {
        let line = self.line();
        self.expect_kw("const")?;
        let ty = self.ty()?;
        let name = self.ident()?;
        self.expect_punct("=")?;
        let value = self.expr()?;
        self.expect_punct(";")?;
        Ok(ConstDecl {
            ty,
            name,
            value,
            line,
            file: self.file,
        })
    }

    fn fn_decl(&mut self) -> PResult<FnDecl> {
        let line = self.line();
        self.expect_kw("fn")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let ty = self.ty()?;
                let pname = self.ident()?;
                params.push(Param { ty, name: pname });
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let body = self.block()?;
        Ok(FnDecl {
            name,
            params,
            body,
            line,
            file: self.file,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        let open_line = self.line();
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.error(&["statement", "`}`"]);
            }
            stmts.push(self.stmt()?);
        }
        let close_line = self.line();
        self.bump();
        Ok(Block {
            open_line,
            close_line,
            stmts,
        })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let line = self.line();
        let kind = match self.peek().clone() {
            Tok::Kw("int") | Tok::Kw("bool") => {
                let ty = self.ty()?;
                let name = self.ident()?;
                let init = if self.is_punct("=") {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect_punct(";")?;
                StmtKind::VarDecl { ty, name, init }
            }
            Tok::Kw("if") => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then_body = self.block()?;
                let else_body = if self.is_kw("else") {
                    self.bump();
                    if self.is_kw("if") {
                        let nested_line = self.line();
                        let nested = self.stmt()?;
                        Some(Block {
                            open_line: nested_line,
                            close_line: nested_line,
                            stmts: vec![nested],
                        })
                    } else {
                        Some(self.block()?)
                    }
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                }
            }
            Tok::Kw("while") => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Kw("return") => {
                self.bump();
                let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
                self.expect_punct(";")?;
                StmtKind::Return(value)
            }
            Tok::Kw("print") => {
                self.bump();
                self.expect_punct("(")?;
                let e = self.expr()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                StmtKind::Print(e)
            }
            Tok::Ident(name) => {
                if matches!(self.peek_at(1), Tok::Punct("=")) {
                    self.bump();
                    self.bump();
                    let value = self.expr()?;
                    self.expect_punct(";")?;
                    StmtKind::Assign { name, value }
                } else if matches!(self.peek_at(1), Tok::Punct("(")) {
                    self.bump();
                    let args = self.call_args()?;
                    self.expect_punct(";")?;
                    StmtKind::Call { name, args }
                } else {
                    self.bump();
                    return self.error(&["`=`", "`(`"]);
                }
            }
            _ => {
                return self.error(&[
                    "`int`",
                    "`bool`",
                    "`if`",
                    "`while`",
                    "`return`",
                    "`print`",
                    "identifier",
                    "`}`",
                ])
            }
        };
        Ok(Stmt { line, kind })
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        let op = match self.peek() {
            Tok::Punct(p) => match *p {
                "||" => BinOp::Or,
                "&&" => BinOp::And,
                "==" => BinOp::Eq,
                "!=" => BinOp::Ne,
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                ">=" => BinOp::Ge,
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                "/" => BinOp::Div,
                "%" => BinOp::Mod,
                _ => return None,
            },
            _ => return None,
        };
        Some(op)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_punct("!") {
            self.bump();
            return Ok(Expr::unary(UnOp::Not, self.unary()?));
        }
        if self.is_punct("-") {
            self.bump();
            return Ok(Expr::unary(UnOp::Neg, self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Kw("true") => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Kw("false") => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Kw("read") => {
                self.bump();
                self.expect_punct("(")?;
                self.expect_punct(")")?;
                Ok(Expr::Read)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.is_punct("(") {
                    let args = self.call_args()?;
                    Ok(Expr::Call { name, args })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => self.error(&["expression"]),
        }
    }
}

/// Parses one MiniLang source file into its top-level items.
pub fn parse_items(source: &str, file: u32) -> Result<Vec<Item>, SyntaxError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0, file };
    let items = p.program()?;
    if items.is_empty() {
        return p.error(&["`fn`", "`const`"]);
    }
    Ok(items)
}

/// Parses a single-file MiniLang program.
pub fn parse_minilang(source: &str) -> Result<Ast, SyntaxError> {
    Ok(Ast {
        items: parse_items(source, 0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let ast = parse_minilang("fn main(){print(1);}").unwrap();
        assert_eq!(ast.items.len(), 1);
        let f = ast.function("main").unwrap();
        assert_eq!(f.body.stmts.len(), 1);
        assert!(matches!(f.body.stmts[0].kind, StmtKind::Print(Expr::Int(1))));
    }

    #[test]
    fn if_else_shape() {
        let ast = parse_minilang("fn main(){int x = read(); if(x>0){print(x);}else{print(0);}}").unwrap();
        let f = ast.function("main").unwrap();
        assert_eq!(f.body.stmts.len(), 2);
        match &f.body.stmts[1].kind {
            StmtKind::If {
                then_body, else_body, ..
            } => {
                assert_eq!(then_body.stmts.len(), 1);
                assert_eq!(else_body.as_ref().unwrap().stmts.len(), 1);
            }
            other => panic!("expected if, got {other:?}"),
        }
    }

    #[test]
    fn missing_initializer_reports_semicolon() {
        let err = parse_minilang("fn main(){int x = ;}").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.column, 19);
        assert_eq!(err.found, "`;`");
        assert!(err.expected.contains(&"expression".to_string()));
    }

    #[test]
    fn precedence_and_associativity() {
        let ast = parse_minilang("fn main(){print(1 - 2 - 3 * 4 < 5 && true || false);}").unwrap();
        let f = ast.function("main").unwrap();
        let StmtKind::Print(e) = &f.body.stmts[0].kind else {
            panic!()
        };
        let Expr::Binary { op: BinOp::Or, lhs, .. } = e else {
            panic!("top should be ||: {e:?}")
        };
        let Expr::Binary {
            op: BinOp::And, lhs, ..
        } = &**lhs
        else {
            panic!()
        };
        let Expr::Binary { op: BinOp::Lt, lhs, .. } = &**lhs else {
            panic!()
        };
        // (1 - 2) - (3 * 4)
        let Expr::Binary {
            op: BinOp::Sub,
            lhs: inner,
            rhs,
        } = &**lhs
        else {
            panic!()
        };
        assert!(matches!(**inner, Expr::Binary { op: BinOp::Sub, .. }));
        assert!(matches!(**rhs, Expr::Binary { op: BinOp::Mul, .. }));
    }

    #[test]
    fn lines_are_tracked() {
        let ast = parse_minilang("fn main() {\n  int a = 1;\n\n  print(a);\n}\n").unwrap();
        let f = ast.function("main").unwrap();
        assert_eq!(f.line, 1);
        assert_eq!(f.body.stmts[0].line, 2);
        assert_eq!(f.body.stmts[1].line, 4);
        assert_eq!(f.body.close_line, 5);
    }

    #[test]
    fn comments_and_globals() {
        let ast = parse_minilang("// header\nconst int K = 42;\nfn main(){ print(K); // tail\n}").unwrap();
        assert_eq!(ast.consts().count(), 1);
        assert_eq!(ast.functions().count(), 1);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_minilang("").is_err());
        assert!(parse_minilang("fn main(){ x; }").is_err());
        assert!(parse_minilang("fn main(){ print(1) }").is_err());
        assert!(parse_minilang("fn main(){ int y = 1 @ 2; }").is_err());
        assert!(parse_minilang("fn main(){ int y = 99999999999999999999; }").is_err());
    }
}
