//! Token-level program representation shared by every stage of the pipeline.
//!
//! Identifiers and literals never become tokens: a token only records the
//! syntactic category of a construct, which is what makes the representation
//! invariant under renaming.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenType {
    FuncBegin,
    FuncEnd,
    Vardef,
    Assign,
    IfBegin,
    ElseBegin,
    IfEnd,
    LoopBegin,
    LoopEnd,
    Call,
    Return,
    Print,
    Read,
    BlockBegin,
    BlockEnd,
}

impl TokenType {
    pub const ALL: [TokenType; 15] = [
        TokenType::FuncBegin,
        TokenType::FuncEnd,
        TokenType::Vardef,
        TokenType::Assign,
        TokenType::IfBegin,
        TokenType::ElseBegin,
        TokenType::IfEnd,
        TokenType::LoopBegin,
        TokenType::LoopEnd,
        TokenType::Call,
        TokenType::Return,
        TokenType::Print,
        TokenType::Read,
        TokenType::BlockBegin,
        TokenType::BlockEnd,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            TokenType::FuncBegin => "FUNC_BEGIN",
            TokenType::FuncEnd => "FUNC_END",
            TokenType::Vardef => "VARDEF",
            TokenType::Assign => "ASSIGN",
            TokenType::IfBegin => "IF_BEGIN",
            TokenType::ElseBegin => "ELSE_BEGIN",
            TokenType::IfEnd => "IF_END",
            TokenType::LoopBegin => "LOOP_BEGIN",
            TokenType::LoopEnd => "LOOP_END",
            TokenType::Call => "CALL",
            TokenType::Return => "RETURN",
            TokenType::Print => "PRINT",
            TokenType::Read => "READ",
            TokenType::BlockBegin => "BLOCK_BEGIN",
            TokenType::BlockEnd => "BLOCK_END",
        }
    }

    /// Structural tokens delimit bodies and never belong to a statement group.
    pub fn is_structural(self) -> bool {
        matches!(
            self,
            TokenType::FuncBegin
                | TokenType::FuncEnd
                | TokenType::ElseBegin
                | TokenType::IfEnd
                | TokenType::LoopEnd
                | TokenType::BlockBegin
                | TokenType::BlockEnd
        )
    }
}

impl fmt::Display for TokenType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTokenTag(pub String);

impl FromStr for TokenType {
    type Err = UnknownTokenTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TokenType::ALL
            .iter()
            .copied()
            .find(|t| t.tag() == s)
            .ok_or_else(|| UnknownTokenTag(s.to_string()))
    }
}

/// Index of a statement group inside an [`EnrichedSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StmtId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    #[serde(rename = "type")]
    pub kind: TokenType,
    pub file_id: u32,
    pub line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stmt_id: Option<StmtId>,
}

impl Token {
    pub fn new(kind: TokenType, file_id: u32, line: u32) -> Self {
        Token {
            kind,
            file_id,
            line: line.max(1),
            stmt_id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub program_id: String,
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn new(program_id: impl Into<String>, tokens: Vec<Token>) -> Self {
        TokenSequence {
            program_id: program_id.into(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn types(&self) -> Vec<TokenType> {
        self.tokens.iter().map(|t| t.kind).collect()
    }

    /// Builds a sequence from bare token types, all in file 0 on line 1.
    pub fn from_types(program_id: impl Into<String>, types: &[TokenType]) -> Self {
        TokenSequence::new(program_id, types.iter().map(|&t| Token::new(t, 0, 1)).collect())
    }
}

/// Alpha-renamed variable symbol. Locals are numbered per function in order of
/// first appearance (parameters first), globals in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Local(u32),
    Global(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Const,
    VarDef,
    Assign,
    Call,
    Return,
    Print,
    If { has_else: bool },
    While,
}

impl GroupKind {
    pub fn is_control(self) -> bool {
        matches!(self, GroupKind::If { .. } | GroupKind::While)
    }
}

/// Which body of the enclosing statement a group sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Top,
    Then,
    Else,
    Body,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementGroup {
    pub stmt_id: StmtId,
    /// Half-open token index range `[start, end)`.
    pub token_span: (usize, usize),
    pub kind: GroupKind,
    /// Function index for statements, `None` for global constants.
    pub function: Option<u32>,
    pub control_parent: Option<StmtId>,
    pub branch: Branch,
    pub reads: Vec<Symbol>,
    pub writes: Vec<Symbol>,
    /// The statement (or anything nested in it) performs I/O or calls a
    /// function that does.
    pub side_effecting: bool,
    /// The statement (or anything nested in it) may abort or diverge: loops,
    /// division by a non-constant divisor, calls to partial functions.
    pub may_fail: bool,
    pub has_return: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichedSequence {
    pub sequence: TokenSequence,
    pub groups: Vec<StatementGroup>,
}

impl EnrichedSequence {
    pub fn without_semantics(sequence: TokenSequence) -> Self {
        EnrichedSequence {
            sequence,
            groups: Vec::new(),
        }
    }

    pub fn has_semantics(&self) -> bool {
        !self.groups.is_empty()
    }

    pub fn group(&self, id: StmtId) -> Option<&StatementGroup> {
        self.groups.get(id.0 as usize).filter(|g| g.stmt_id == id)
    }
}
