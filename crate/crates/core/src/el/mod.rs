//! Surface language: lexer, parser and pretty printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use ast::ElScript;
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse_script, ParseError};
pub use pretty::pretty_el;
