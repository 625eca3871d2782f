//! Lexing, parsing, include resolution and pretty-printing of `.fl` sources.

pub mod ast;
mod include;
pub mod lexer;
mod parser;
mod pretty;

pub use ast::Ast;
pub use include::{resolve_includes, resolve_includes_with, LoadError, Loaded};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::MAX_DEPTH;
pub use pretty::{pretty, pretty_expr, type_str};

use crate::diag::Diagnostic;
use crate::source::FileId;

/// Parses one translation unit without following `%include`/`%import`.
pub fn parse_source(source: &str, file: FileId) -> Result<Ast, Diagnostic> {
    parse_unit(source, file, ast::Origin::Main)
}

pub(crate) fn parse_unit(source: &str, file: FileId, origin: ast::Origin) -> Result<Ast, Diagnostic> {
    let tokens = tokenize(source, file)?;
    parser::Parser::new(tokens, origin).parse_unit()
}
