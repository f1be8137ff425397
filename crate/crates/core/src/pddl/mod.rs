//! PDDL+ domain and problem models: tokenizer, parser and printer.

mod ast;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use lexer::{read_sexprs, tokenize, Pos, SExpr, Token, TokenKind};
pub use parser::{
    parse_domain, parse_domain_str, parse_domain_with, parse_number, parse_problem, parse_problem_str,
    parse_problem_with,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub message: String,
    pub pos: Pos,
}

impl ParseError {
    pub fn new(message: impl Into<String>, pos: Pos) -> Self {
        ParseError {
            message: message.into(),
            pos,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}
