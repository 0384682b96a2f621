//! Token-based source-code plagiarism detection with two obfuscation
//! defenses: token sequence normalization and subsequence match merging.

pub mod attacks;
pub mod frontend;
pub mod generator;
pub mod interp;
pub mod matcher;
pub mod minilang;
pub mod smm;
pub mod stats;
pub mod token;
pub mod tsn;

pub use frontend::{tokenize, FrontendError, Language, Program, SourceFile};
pub use token::*;
