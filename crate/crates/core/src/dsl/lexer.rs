use std::fmt;

use super::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Identifier-like word: letters, digits, `_`, and inner `.`/`-`.
    Word(String),
    Int(i64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Colon,
    Eq,
    /// `->`
    Flow,
    /// `~>`
    Trigger,
    /// `=>`
    Bulk,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Flow => f.write_str("`->`"),
            Tok::Trigger => f.write_str("`~>`"),
            Tok::Bulk => f.write_str("`=>`"),
            Tok::Eof => f.write_str("end of file"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whether `s` lexes as a single non-integer word.
pub fn is_word(s: &str) -> bool {
    let toks = match tokenize(s) {
        Ok(t) => t,
        Err(_) => return false,
    };
    matches!(toks.as_slice(), [Token { tok: Tok::Word(w), .. }, Token { tok: Tok::Eof, .. }] if w == s)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Tokenize newline-normalized text. Lexing stops at the first error since
/// later positions are unreliable after an unterminated string.
pub fn tokenize(text: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut cur = Cursor { chars: text.chars().collect(), pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    let mut errors = Vec::new();
    while let Some(c) = cur.peek() {
        let (line, column, start) = (cur.line, cur.col, cur.pos);
        let single = |tok: Tok| Token { tok, span: Span { line, column, length: 1 } };
        match c {
            _ if c.is_whitespace() => {
                cur.bump();
            }
            '/' if cur.peek_at(1) == Some('/') => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            '{' | '}' | '(' | ')' | ';' | ',' | ':' => {
                cur.bump();
                out.push(single(match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    _ => Tok::Colon,
                }));
            }
            '-' if cur.peek_at(1) == Some('>') => {
                cur.bump();
                cur.bump();
                out.push(Token { tok: Tok::Flow, span: Span { line, column, length: 2 } });
            }
            '~' if cur.peek_at(1) == Some('>') => {
                cur.bump();
                cur.bump();
                out.push(Token { tok: Tok::Trigger, span: Span { line, column, length: 2 } });
            }
            '=' if cur.peek_at(1) == Some('>') => {
                cur.bump();
                cur.bump();
                out.push(Token { tok: Tok::Bulk, span: Span { line, column, length: 2 } });
            }
            '=' => {
                cur.bump();
                out.push(single(Tok::Eq));
            }
            '"' => {
                cur.bump();
                let mut value = String::new();
                let mut closed = false;
                while let Some(c) = cur.bump() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match cur.bump() {
                            Some('n') => value.push('\n'),
                            Some('t') => value.push('\t'),
                            Some(other) => value.push(other),
                            None => break,
                        },
                        other => value.push(other),
                    }
                }
                let length = cur.pos - start;
                if !closed {
                    errors.push(Diagnostic::error("unterminated string literal", Span { line, column, length }));
                    return Err(errors);
                }
                out.push(Token { tok: Tok::Str(value), span: Span { line, column, length } });
            }
            _ if is_word_char(c) || (c == '-' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut word = String::new();
                word.push(cur.bump().unwrap());
                while let Some(c) = cur.peek() {
                    let joins = (c == '.' || c == '-') && cur.peek_at(1).is_some_and(is_word_char);
                    if is_word_char(c) || joins {
                        word.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                let length = cur.pos - start;
                let span = Span { line, column, length };
                let is_int = {
                    let digits = word.strip_prefix('-').unwrap_or(&word);
                    !digits.is_empty() && digits.chars().all(|d| d.is_ascii_digit())
                };
                if is_int {
                    match word.parse::<i64>() {
                        Ok(v) => out.push(Token { tok: Tok::Int(v), span }),
                        Err(_) => errors.push(Diagnostic::error(format!("integer `{word}` out of range"), span)),
                    }
                } else if word.starts_with('-') {
                    errors.push(Diagnostic::error(format!("unexpected `{word}`"), span));
                } else {
                    out.push(Token { tok: Tok::Word(word), span });
                }
            }
            other => {
                cur.bump();
                errors.push(Diagnostic::error(
                    format!("unexpected character {other:?}"),
                    Span { line, column, length: 1 },
                ));
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    out.push(Token { tok: Tok::Eof, span: Span { line: cur.line, column: cur.col, length: 0 } });
    Ok(out)
}
