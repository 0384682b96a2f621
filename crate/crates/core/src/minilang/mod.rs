//! MiniLang: a small imperative language (functions, int/bool variables,
//! if/else, while, calls, print/read) used as the analyzable frontend.

pub mod analysis;
pub mod ast;
pub mod parser;
pub mod render;

pub use analysis::{analyze, validate, FnSummary, ProgramInfo, SemanticError};
pub use ast::*;
pub use parser::{parse_minilang, SyntaxError};
pub use render::{render, render_expr};
