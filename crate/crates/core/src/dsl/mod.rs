//! Textual surface language for models (`.tm`) and scenarios (`.scn`).
//!
//! The grammar is documented in `docs/dsl.md`.

mod lexer;
mod lower;
mod parser;
mod printer;
pub mod scenario;

use std::fmt;

use serde::Serialize;

use crate::ir::Model;

pub use lexer::is_word;
pub use printer::print;

/// 1-based position of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, span: Span) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into(), span }
    }

    /// `path:line:col: error: message`
    pub fn render(&self, path: &str) -> String {
        format!("{path}:{}:{}: {self}", self.span.line, self.span.column)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

impl SourceFile {
    /// Normalizes `\r\n` and lone `\r` to `\n`.
    pub fn new(path: impl Into<String>, text: &str) -> Self {
        SourceFile { path: path.into(), text: text.replace("\r\n", "\n").replace('\r', "\n") }
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> std::io::Result<Self> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p)?;
        Ok(SourceFile::new(p.display().to_string(), &text))
    }
}

pub fn parse(source: &SourceFile) -> Result<Model, Vec<Diagnostic>> {
    let tokens = lexer::tokenize(&source.text)?;
    let mut p = parser::Parser::new(tokens);
    let file = p.file();
    if !p.errors.is_empty() {
        return Err(p.errors);
    }
    lower::lower(file)
}

/// Convenience wrapper for in-memory sources.
pub fn parse_str(text: &str) -> Result<Model, Vec<Diagnostic>> {
    parse(&SourceFile::new("<input>", text))
}

pub(crate) use lexer::{tokenize, Tok};
pub(crate) use parser::{PResult, Parser};
