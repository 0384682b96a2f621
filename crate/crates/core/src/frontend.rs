//! Programs, tokenization and token-stream import.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::analysis::local_names;
use crate::minilang::{self, Ast, Block, Expr, FnDecl, Item, ProgramInfo, Stmt, StmtKind};
use crate::token::*;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("syntax error: {0}")]
    Syntax(#[from] minilang::SyntaxError),
    #[error("semantic error: {0}")]
    Semantic(#[from] minilang::SemanticError),
    #[error("malformed token stream at line {line}: {message}")]
    ImportFormat { line: usize, message: String },
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Language {
    Minilang,
    ImportedTokenStream,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub id: String,
    pub files: Vec<SourceFile>,
    pub language: Language,
}

pub const MINILANG_EXT: &str = "ml";
pub const TOKEN_STREAM_EXT: &str = "tok";

impl Program {
    pub fn minilang(id: impl Into<String>, source: impl Into<String>) -> Self {
        Program {
            id: id.into(),
            files: vec![SourceFile {
                path: "main.ml".into(),
                text: source.into(),
            }],
            language: Language::Minilang,
        }
    }

    pub fn from_ast(id: impl Into<String>, ast: &Ast) -> Self {
        Program::minilang(id, minilang::render(ast))
    }

    /// Loads one submission directory: every regular file with the MiniLang
    /// or token-stream extension, sorted by relative path.
    pub fn load_dir(id: impl Into<String>, dir: &Path) -> Result<Self, FrontendError> {
        let mut files = Vec::new();
        collect_files(dir, dir, &mut files)?;
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let has_ml = files.iter().any(|f| f.path.ends_with(".ml"));
        let has_tok = files.iter().any(|f| f.path.ends_with(".tok"));
        let language = match (has_ml, has_tok) {
            (true, false) => Language::Minilang,
            (false, true) => Language::ImportedTokenStream,
            (true, true) => {
                return Err(FrontendError::InvalidProgram(format!(
                    "{} mixes MiniLang sources and token streams",
                    dir.display()
                )))
            }
            (false, false) => {
                return Err(FrontendError::InvalidProgram(format!(
                    "{} contains no .{MINILANG_EXT} or .{TOKEN_STREAM_EXT} files",
                    dir.display()
                )))
            }
        };
        let program = Program {
            id: id.into(),
            files,
            language,
        };
        program.check()?;
        Ok(program)
    }

    fn check(&self) -> Result<(), FrontendError> {
        if self.files.is_empty() {
            return Err(FrontendError::InvalidProgram(format!(
                "program `{}` has no files",
                self.id
            )));
        }
        let mut paths = BTreeSet::new();
        for f in &self.files {
            if !paths.insert(f.path.as_str()) {
                return Err(FrontendError::InvalidProgram(format!(
                    "duplicate path `{}` in program `{}`",
                    f.path, self.id
                )));
            }
        }
        Ok(())
    }

    /// Parses and validates every file. Items keep their file index.
    pub fn parse(&self) -> Result<Ast, FrontendError> {
        self.check()?;
        if self.language != Language::Minilang {
            return Err(FrontendError::InvalidProgram(format!(
                "program `{}` is an imported token stream, not MiniLang",
                self.id
            )));
        }
        let mut items = Vec::new();
        for (i, f) in self.files.iter().enumerate() {
            let parsed = minilang::parser::parse_items(&f.text, i as u32).map_err(|mut e| {
                e.file = Some(f.path.clone());
                e
            })?;
            items.extend(parsed);
        }
        let ast = Ast { items };
        minilang::validate(&ast)?;
        Ok(ast)
    }

    /// Replaces the program text with the rendering of `ast`, keeping the
    /// file layout when the program has several files.
    pub fn with_ast(&self, id: impl Into<String>, ast: &Ast) -> Program {
        let files = if self.files.len() <= 1 {
            vec![SourceFile {
                path: self
                    .files
                    .first()
                    .map_or_else(|| "main.ml".to_string(), |f| f.path.clone()),
                text: minilang::render(ast),
            }]
        } else {
            self.files
                .iter()
                .enumerate()
                .map(|(i, f)| SourceFile {
                    path: f.path.clone(),
                    text: minilang::render::render_file(ast, i as u32),
                })
                .collect()
        };
        Program {
            id: id.into(),
            files,
            language: Language::Minilang,
        }
    }

    pub fn line_count(&self) -> usize {
        self.files.iter().map(|f| f.text.lines().count()).sum()
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<SourceFile>) -> Result<(), FrontendError> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        let ft = entry.file_type()?;
        if ft.is_dir() {
            collect_files(root, &path, out)?;
        } else if ft.is_file() {
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if ext == MINILANG_EXT || ext == TOKEN_STREAM_EXT {
                let rel = path
                    .strip_prefix(root)
                    .unwrap_or(&path)
                    .to_string_lossy()
                    .replace('\\', "/");
                out.push(SourceFile {
                    path: rel,
                    text: std::fs::read_to_string(&path)?,
                });
            }
        }
    }
    Ok(())
}

/// Tokenizes a program. MiniLang programs yield statement groups; imported
/// token streams yield a bare sequence.
pub fn tokenize(program: &Program) -> Result<EnrichedSequence, FrontendError> {
    match program.language {
        Language::Minilang => {
            let ast = program.parse()?;
            Ok(tokenize_ast(&program.id, &ast))
        }
        Language::ImportedTokenStream => {
            program.check()?;
            let mut tokens = Vec::new();
            for (i, f) in program.files.iter().enumerate() {
                let (_, seq) = parse_token_stream(&f.text)?;
                tokens.extend(seq.into_iter().map(|mut t| {
                    t.file_id = i as u32;
                    t
                }));
            }
            Ok(EnrichedSequence::without_semantics(TokenSequence::new(
                program.id.clone(),
                tokens,
            )))
        }
    }
}

/// Parses the line-oriented token-stream format: `<TAG> <line>` per record,
/// blank lines ignored, optional `#program <id>` header as the first record.
fn parse_token_stream(text: &str) -> Result<(Option<String>, Vec<Token>), FrontendError> {
    let mut header = None;
    let mut tokens = Vec::new();
    let mut seen_record = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#program") {
            let id = rest.trim();
            if seen_record || header.is_some() || id.is_empty() {
                return Err(FrontendError::ImportFormat {
                    line: lineno,
                    message: "`#program <id>` must be a single leading header".into(),
                });
            }
            header = Some(id.to_string());
            continue;
        }
        seen_record = true;
        let mut parts = line.split_whitespace();
        let (Some(tag), Some(src_line), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(FrontendError::ImportFormat {
                line: lineno,
                message: format!("expected `<TOKEN_TAG> <line>`, got `{line}`"),
            });
        };
        let kind = tag.parse::<TokenType>().map_err(|e| FrontendError::ImportFormat {
            line: lineno,
            message: format!("unknown token tag `{}`", e.0),
        })?;
        let src_line: u32 = src_line
            .parse()
            .ok()
            .filter(|&l| l >= 1)
            .ok_or_else(|| FrontendError::ImportFormat {
                line: lineno,
                message: format!("invalid source line `{src_line}`"),
            })?;
        tokens.push(Token::new(kind, 0, src_line));
    }
    Ok((header, tokens))
}

/// Reads a token-stream file. The program id comes from the `#program`
/// header, else from the file stem.
pub fn import_token_stream(path: &Path) -> Result<TokenSequence, FrontendError> {
    let text = std::fs::read_to_string(path)?;
    let (header, tokens) = parse_token_stream(&text)?;
    let id = header.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Ok(TokenSequence::new(id, tokens))
}

pub fn import_token_stream_str(id: &str, text: &str) -> Result<TokenSequence, FrontendError> {
    let (header, tokens) = parse_token_stream(text)?;
    Ok(TokenSequence::new(header.unwrap_or_else(|| id.to_string()), tokens))
}

pub fn write_token_stream(seq: &TokenSequence) -> String {
    let mut out = format!("#program {}\n", seq.program_id);
    for t in &seq.tokens {
        out.push_str(&format!("{} {}\n", t.kind.tag(), t.line));
    }
    out
}

struct SymbolTable<'a> {
    locals: BTreeSet<String>,
    numbering: BTreeMap<String, u32>,
    info: &'a ProgramInfo,
}

impl SymbolTable<'_> {
    fn resolve(&mut self, name: &str) -> Symbol {
        if !self.locals.contains(name) {
            if let Some(g) = self.info.const_index(name) {
                return Symbol::Global(g);
            }
        }
        let next = self.numbering.len() as u32;
        Symbol::Local(*self.numbering.entry(name.to_string()).or_insert(next))
    }
}

#[derive(Default, Clone, Copy)]
struct Flags {
    side_effecting: bool,
    may_fail: bool,
    has_return: bool,
}

impl Flags {
    fn merge(&mut self, o: Flags) {
        self.side_effecting |= o.side_effecting;
        self.may_fail |= o.may_fail;
        self.has_return |= o.has_return;
    }
}

struct Tokenizer<'a> {
    tokens: Vec<Token>,
    groups: Vec<StatementGroup>,
    info: &'a ProgramInfo,
    file: u32,
}

fn push_sorted_unique(v: &mut Vec<Symbol>, s: Symbol) {
    if let Err(pos) = v.binary_search(&s) {
        v.insert(pos, s);
    }
}

impl Tokenizer<'_> {
    fn emit(&mut self, kind: TokenType, line: u32, stmt: Option<StmtId>) {
        let mut t = Token::new(kind, self.file, line);
        t.stmt_id = stmt;
        self.tokens.push(t);
    }

    fn expr_tokens(&mut self, e: &Expr, line: u32, stmt: StmtId) {
        match e {
            Expr::Read => self.emit(TokenType::Read, line, Some(stmt)),
            Expr::Call { args, .. } => {
                self.emit(TokenType::Call, line, Some(stmt));
                for a in args {
                    self.expr_tokens(a, line, stmt);
                }
            }
            Expr::Unary { expr, .. } => self.expr_tokens(expr, line, stmt),
            Expr::Binary { lhs, rhs, .. } => {
                self.expr_tokens(lhs, line, stmt);
                self.expr_tokens(rhs, line, stmt);
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
        }
    }

    fn block(
        &mut self,
        block: &Block,
        syms: &mut SymbolTable,
        function: u32,
        parent: Option<StmtId>,
        branch: Branch,
    ) -> Flags {
        self.emit(TokenType::BlockBegin, block.open_line, None);
        let mut flags = Flags::default();
        for s in &block.stmts {
            flags.merge(self.stmt(s, syms, function, parent, branch));
        }
        self.emit(TokenType::BlockEnd, block.close_line, None);
        flags
    }

    fn stmt(
        &mut self,
        s: &Stmt,
        syms: &mut SymbolTable,
        function: u32,
        parent: Option<StmtId>,
        branch: Branch,
    ) -> Flags {
        let id = StmtId(self.groups.len() as u32);
        let (lead, kind) = match &s.kind {
            StmtKind::VarDecl { .. } => (TokenType::Vardef, GroupKind::VarDef),
            StmtKind::Assign { .. } => (TokenType::Assign, GroupKind::Assign),
            StmtKind::If { else_body, .. } => (
                TokenType::IfBegin,
                GroupKind::If {
                    has_else: else_body.is_some(),
                },
            ),
            StmtKind::While { .. } => (TokenType::LoopBegin, GroupKind::While),
            StmtKind::Call { .. } => (TokenType::Call, GroupKind::Call),
            StmtKind::Return(_) => (TokenType::Return, GroupKind::Return),
            StmtKind::Print(_) => (TokenType::Print, GroupKind::Print),
        };

        let mut reads = Vec::new();
        for e in s.own_exprs() {
            e.for_each_var(&mut |v| push_sorted_unique(&mut reads, syms.resolve(v)));
        }
        let writes = s.written_var().map(|v| vec![syms.resolve(v)]).unwrap_or_default();

        let mut own = Flags::default();
        for e in s.own_exprs() {
            own.side_effecting |= self.info.expr_side_effecting(e);
            own.may_fail |= self.info.expr_may_fail(e);
        }
        match &s.kind {
            StmtKind::Print(_) => own.side_effecting = true,
            StmtKind::Call { name, .. } => {
                let sum = self.info.summary(name);
                own.side_effecting |= sum.side_effecting;
                own.may_fail |= sum.may_fail;
            }
            StmtKind::Return(_) => own.has_return = true,
            StmtKind::While { .. } => own.may_fail = true,
            _ => {}
        }

        let start = self.tokens.len();
        self.emit(lead, s.line, Some(id));
        if let StmtKind::Call { args, .. } = &s.kind {
            for a in args {
                self.expr_tokens(a, s.line, id);
            }
        } else {
            for e in s.own_exprs() {
                self.expr_tokens(e, s.line, id);
            }
        }
        let end = self.tokens.len();
        self.groups.push(StatementGroup {
            stmt_id: id,
            token_span: (start, end),
            kind,
            function: Some(function),
            control_parent: parent,
            branch,
            reads,
            writes,
            side_effecting: false,
            may_fail: false,
            has_return: false,
        });

        let mut total = own;
        match &s.kind {
            StmtKind::If {
                then_body, else_body, ..
            } => {
                total.merge(self.block(then_body, syms, function, Some(id), Branch::Then));
                if let Some(b) = else_body {
                    self.emit(TokenType::ElseBegin, b.open_line, None);
                    total.merge(self.block(b, syms, function, Some(id), Branch::Else));
                }
                let end_line = else_body.as_ref().unwrap_or(then_body).close_line;
                self.emit(TokenType::IfEnd, end_line, None);
            }
            StmtKind::While { body, .. } => {
                total.merge(self.block(body, syms, function, Some(id), Branch::Body));
                self.emit(TokenType::LoopEnd, body.close_line, None);
            }
            _ => {}
        }
        let g = &mut self.groups[id.0 as usize];
        g.side_effecting = total.side_effecting;
        g.may_fail = total.may_fail;
        g.has_return = total.has_return;
        total
    }

    fn function(&mut self, f: &FnDecl, index: u32) {
        self.file = f.file;
        let mut syms = SymbolTable {
            locals: local_names(f, &self.info.consts),
            numbering: BTreeMap::new(),
            info: self.info,
        };
        for p in &f.params {
            syms.resolve(&p.name);
        }
        self.emit(TokenType::FuncBegin, f.line, None);
        self.block(&f.body, &mut syms, index, None, Branch::Top);
        self.emit(TokenType::FuncEnd, f.body.close_line, None);
    }
}

/// Tokenizes a parsed program. Statement groups are numbered in pre-order,
/// which is also the order [`crate::tsn`] uses to map groups back to the AST.
pub fn tokenize_ast(program_id: &str, ast: &Ast) -> EnrichedSequence {
    let info = minilang::analyze(ast);
    let mut tk = Tokenizer {
        tokens: Vec::new(),
        groups: Vec::new(),
        info: &info,
        file: 0,
    };
    let mut fn_index = 0;
    for item in &ast.items {
        match item {
            Item::Const(c) => {
                tk.file = c.file;
                let id = StmtId(tk.groups.len() as u32);
                let start = tk.tokens.len();
                tk.emit(TokenType::Vardef, c.line, Some(id));
                let global = info.const_index(&c.name).unwrap_or(0);
                tk.groups.push(StatementGroup {
                    stmt_id: id,
                    token_span: (start, start + 1),
                    kind: GroupKind::Const,
                    function: None,
                    control_parent: None,
                    branch: Branch::Top,
                    reads: Vec::new(),
                    writes: vec![Symbol::Global(global)],
                    side_effecting: false,
                    may_fail: false,
                    has_return: false,
                });
            }
            Item::Func(f) => {
                tk.function(f, fn_index);
                fn_index += 1;
            }
        }
    }
    EnrichedSequence {
        sequence: TokenSequence::new(program_id, tk.tokens),
        groups: tk.groups,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenType::*;

    #[test]
    fn simple_function_tokens_and_groups() {
        let p = Program::minilang("p", "fn f(){int a = 1; print(a);}");
        let e = tokenize(&p).unwrap();
        assert_eq!(
            e.sequence.types(),
            vec![FuncBegin, BlockBegin, Vardef, Print, BlockEnd, FuncEnd]
        );
        assert_eq!(e.groups.len(), 2);
        let def = &e.groups[0];
        assert_eq!(def.kind, GroupKind::VarDef);
        assert_eq!(def.writes, vec![Symbol::Local(0)]);
        assert!(!def.side_effecting);
        let pr = &e.groups[1];
        assert_eq!(pr.reads, vec![Symbol::Local(0)]);
        assert!(pr.side_effecting);
    }

    #[test]
    fn renaming_is_invisible() {
        let a = tokenize(&Program::minilang("p", "fn f(){int a = 1; print(a);}")).unwrap();
        let b = tokenize(&Program::minilang("p", "fn f(){int counter = 1; print(counter);}")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tokenization_is_deterministic() {
        let p = Program::minilang(
            "p",
            "fn main(){int x = read(); if(x>0){print(x);}else{while(x<0){x = x + 1;}}}",
        );
        assert_eq!(tokenize(&p).unwrap(), tokenize(&p).unwrap());
    }

    #[test]
    fn control_structure_tokens() {
        let p = Program::minilang(
            "p",
            "fn main(){int x = read(); if(x>0){print(x);}else{print(0);} while(x>0){x = x - 1;}}",
        );
        let e = tokenize(&p).unwrap();
        assert_eq!(
            e.sequence.types(),
            vec![
                FuncBegin, BlockBegin, Vardef, Read, IfBegin, BlockBegin, Print, BlockEnd, ElseBegin, BlockBegin,
                Print, BlockEnd, IfEnd, LoopBegin, BlockBegin, Assign, BlockEnd, LoopEnd, BlockEnd, FuncEnd
            ]
        );
        let if_group = &e.groups[1];
        assert_eq!(if_group.kind, GroupKind::If { has_else: true });
        assert!(if_group.side_effecting);
        assert_eq!(e.groups[2].control_parent, Some(StmtId(1)));
        assert_eq!(e.groups[3].branch, Branch::Else);
        let w = &e.groups[4];
        assert!(w.may_fail);
        assert!(!w.side_effecting);
    }

    #[test]
    fn spans_partition_statement_tokens() {
        let p = Program::minilang(
            "p",
            "const int K = 3; fn g(int a){return a*K;} fn main(){int x = g(read()); g(2); print(x);}",
        );
        let e = tokenize(&p).unwrap();
        let mut owner = vec![None; e.sequence.len()];
        for g in &e.groups {
            for (i, slot) in owner.iter_mut().enumerate().take(g.token_span.1).skip(g.token_span.0) {
                assert!(slot.is_none());
                *slot = Some(g.stmt_id);
                assert_eq!(e.sequence.tokens[i].stmt_id, Some(g.stmt_id));
            }
        }
        for (t, o) in e.sequence.tokens.iter().zip(&owner) {
            assert_eq!(t.kind.is_structural(), o.is_none());
        }
        assert_eq!(e.groups[0].writes, vec![Symbol::Global(0)]);
        assert_eq!(e.groups[1].reads, vec![Symbol::Local(0), Symbol::Global(0)]);
    }

    #[test]
    fn token_stream_import() {
        let s = import_token_stream_str("x", "VARDEF 1\nASSIGN 2\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.tokens[1].line, 2);
        let empty = import_token_stream_str("x", "").unwrap();
        assert!(empty.is_empty());
        match import_token_stream_str("x", "FOO 3") {
            Err(FrontendError::ImportFormat { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        let h = import_token_stream_str("x", "#program abc\nPRINT 4\n").unwrap();
        assert_eq!(h.program_id, "abc");
        assert!(import_token_stream_str("x", "PRINT\n").is_err());
        assert!(import_token_stream_str("x", "PRINT 0\n").is_err());
        assert!(import_token_stream_str("x", "PRINT 1\n#program late\n").is_err());
    }

    #[test]
    fn token_stream_round_trip() {
        let e = tokenize(&Program::minilang("q", "fn main(){print(read());}")).unwrap();
        let text = write_token_stream(&e.sequence);
        let back = import_token_stream_str("ignored", &text).unwrap();
        assert_eq!(back.program_id, "q");
        assert_eq!(back.types(), e.sequence.types());
    }

    #[test]
    fn imported_programs_have_no_semantics() {
        let p = Program {
            id: "imp".into(),
            files: vec![
                SourceFile {
                    path: "a.tok".into(),
                    text: "VARDEF 1\n".into(),
                },
                SourceFile {
                    path: "b.tok".into(),
                    text: "PRINT 1\nRETURN 2\n".into(),
                },
            ],
            language: Language::ImportedTokenStream,
        };
        let e = tokenize(&p).unwrap();
        assert!(!e.has_semantics());
        assert_eq!(e.sequence.len(), 3);
        assert_eq!(e.sequence.tokens[2].file_id, 1);
    }

    #[test]
    fn duplicate_paths_rejected() {
        let mut p = Program::minilang("p", "fn main(){}");
        p.files.push(p.files[0].clone());
        assert!(matches!(tokenize(&p), Err(FrontendError::InvalidProgram(_))));
    }
}
