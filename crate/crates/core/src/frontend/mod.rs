//! Lexer, parser and scope resolution for the app language subset.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod scope;

use serde::{Deserialize, Serialize};

pub use ast::{AstNode, LiteralValue, Location, NodeKind};
pub use lexer::{tokenize, tokenize_str, Token, TokenKind};
pub use parser::parse;
pub use scope::{resolve_scopes, Binding, ScopedAst};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceProgram {
    pub file_name: String,
    pub source_text: String,
}

impl SourceProgram {
    pub fn new(file_name: impl Into<String>, source_text: impl Into<String>) -> Self {
        Self {
            file_name: file_name.into(),
            source_text: source_text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrontendError {
    #[error("{location}: unexpected character {character:?}")]
    Lex { location: Location, character: char },
    #[error("{location}: expected {expected}, found {found}")]
    Parse {
        location: Location,
        expected: String,
        found: String,
    },
    #[error("{location}: unsupported construct: {name}")]
    Unsupported { location: Location, name: String },
}

impl FrontendError {
    pub fn location(&self) -> Location {
        match self {
            FrontendError::Lex { location, .. }
            | FrontendError::Parse { location, .. }
            | FrontendError::Unsupported { location, .. } => *location,
        }
    }
}

/// Tokenize and parse a program into a `File` node.
pub fn parse_program(program: &SourceProgram) -> Result<AstNode, FrontendError> {
    let tokens = tokenize(program)?;
    parser::parse_named(&tokens, &program.file_name)
}
