//! Recursive-descent parser from tokens to a surface AST.

use crate::ir::{ActionKind, Cardinality, Level, Op, Role, ValueType};

use super::lexer::{Tok, Token};
use super::{Diagnostic, Span};

pub(crate) const RESERVED: &[&str] = &[
    "model",
    "level",
    "thimac",
    "event",
    "chronology",
    "repeat",
    "until",
    "region",
    "store",
    "key",
    "halt",
    "when",
    "bulk",
];

const MAX_ERRORS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned<T> {
    pub value: T,
    pub span: Span,
}

#[derive(Debug, Default)]
pub struct File {
    pub items: Vec<Item>,
}

#[derive(Debug)]
pub enum Item {
    Model(Spanned<String>),
    Level(Spanned<Level>),
    Thimac(ThimacDecl),
    Arc(ArcStmt),
    Event(EventDecl),
    Chronology(Spanned<Vec<StepAst>>),
}

#[derive(Debug)]
pub struct ThimacDecl {
    pub name: Spanned<String>,
    pub display: Option<String>,
    pub role: Role,
    pub storage: bool,
    pub key: bool,
    pub value_type: Option<ValueType>,
    pub cardinality: Option<Cardinality>,
    pub columns: Option<Vec<String>>,
    pub body: Vec<BodyItem>,
}

#[derive(Debug)]
pub enum BodyItem {
    Action(ActionDecl),
    Thimac(ThimacDecl),
    Arc(ArcStmt),
}

#[derive(Debug)]
pub struct ActionDecl {
    pub kind: ActionKind,
    pub kind_span: Span,
    pub name: Option<Spanned<String>>,
    pub label: Option<String>,
    pub storage: bool,
    pub op: Option<Op>,
    pub column: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrow {
    Flow,
    Trigger,
    Bulk,
}

#[derive(Debug)]
pub struct ArcStmt {
    pub refs: Vec<Spanned<String>>,
    pub arrows: Vec<Arrow>,
    pub guard: Option<String>,
    pub bulk: bool,
}

#[derive(Debug)]
pub struct EventDecl {
    pub id: Spanned<String>,
    pub description: Option<String>,
    pub halt: bool,
    pub region: Vec<Spanned<String>>,
}

#[derive(Debug)]
pub enum StepAst {
    Event(Spanned<String>),
    Repeat { max: Option<u32>, body: Vec<StepAst>, until: Spanned<String> },
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub(crate) errors: Vec<Diagnostic>,
}

/// Marker for an already-reported error; the caller resynchronizes.
pub(crate) struct Reported;

pub(crate) type PResult<T> = Result<T, Reported>;

impl Parser {
    pub(crate) fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, errors: Vec::new() }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    pub(crate) fn error<T>(&mut self, message: impl Into<String>, span: Span) -> PResult<T> {
        if self.errors.len() < MAX_ERRORS {
            self.errors.push(Diagnostic::error(message, span));
        }
        Err(Reported)
    }

    pub(crate) fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let found = self.peek().to_string();
        let span = self.span();
        self.error(format!("expected {expected}, found {found}"), span)
    }

    pub(crate) fn expect(&mut self, tok: Tok, what: &str) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            self.unexpected(what)
        }
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn keyword(&mut self, w: &str) -> PResult<Span> {
        if self.is_word(w) {
            Ok(self.bump().span)
        } else {
            self.unexpected(&format!("`{w}`"))
        }
    }

    pub(crate) fn word(&mut self, what: &str) -> PResult<Spanned<String>> {
        match self.peek().clone() {
            Tok::Word(w) => {
                let span = self.bump().span;
                Ok(Spanned { value: w, span })
            }
            _ => self.unexpected(what),
        }
    }

    /// A name that is not a reserved word.
    pub(crate) fn ident(&mut self, what: &str) -> PResult<Spanned<String>> {
        if let Tok::Word(w) = self.peek() {
            if RESERVED.contains(&w.as_str()) {
                let (msg, span) = (format!("`{w}` is reserved and cannot be used as {what}"), self.span());
                return self.error(msg, span);
            }
        }
        self.word(what)
    }

    fn string(&mut self) -> Option<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Some(s)
            }
            _ => None,
        }
    }

    /// Word, integer, or string used as an attribute value.
    pub(crate) fn attr_value(&mut self, what: &str) -> PResult<Spanned<String>> {
        match self.peek().clone() {
            Tok::Word(w) | Tok::Str(w) => {
                let span = self.bump().span;
                Ok(Spanned { value: w, span })
            }
            Tok::Int(i) => {
                let span = self.bump().span;
                Ok(Spanned { value: i.to_string(), span })
            }
            _ => self.unexpected(what),
        }
    }

    fn parse_keyword<T: std::str::FromStr>(&mut self, what: &str) -> PResult<T> {
        let v = self.attr_value(what)?;
        match v.value.parse::<T>() {
            Ok(x) => Ok(x),
            Err(_) => self.error(format!("unknown {what} `{}`", v.value), v.span),
        }
    }

    /// Skip to just past the next `;`, or up to an unmatched `}` (left in
    /// place for the enclosing block), skipping nested braces.
    pub(crate) fn synchronize(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi if depth == 0 => {
                    self.bump();
                    return;
                }
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        return;
                    }
                }
                _ => {}
            }
            self.bump();
        }
    }

    pub(crate) fn file(&mut self) -> File {
        let mut file = File::default();
        while !self.at_eof() {
            let before = self.pos;
            match self.item() {
                Ok(item) => file.items.push(item),
                Err(Reported) => {
                    self.synchronize();
                    if self.pos == before {
                        // Stray `}` at top level.
                        self.bump();
                    }
                }
            }
            if self.errors.len() >= MAX_ERRORS {
                break;
            }
        }
        file
    }

    fn starts_arc(&self) -> bool {
        matches!(self.peek_at(1), Tok::Flow | Tok::Trigger | Tok::Bulk)
    }

    fn item(&mut self) -> PResult<Item> {
        let Tok::Word(w) = self.peek().clone() else {
            return self.unexpected("a declaration");
        };
        if self.starts_arc() {
            return self.arc_stmt().map(Item::Arc);
        }
        match w.as_str() {
            "model" => {
                self.bump();
                let name = self.word("a model name")?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Model(name))
            }
            "level" => {
                let span = self.bump().span;
                let level = self.parse_keyword::<Level>("level")?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Item::Level(Spanned { value: level, span }))
            }
            "thimac" => self.thimac().map(Item::Thimac),
            "event" => self.event().map(Item::Event),
            "chronology" => {
                let span = self.bump().span;
                self.expect(Tok::LBrace, "`{`")?;
                let steps = self.steps()?;
                self.expect(Tok::RBrace, "`}`")?;
                Ok(Item::Chronology(Spanned { value: steps, span }))
            }
            _ => self.unexpected("`model`, `thimac`, `event`, `chronology`, or an arc"),
        }
    }

    fn thimac(&mut self) -> PResult<ThimacDecl> {
        self.keyword("thimac")?;
        let name = self.word("a thimac name")?;
        if name.value.contains('.') {
            return self.error("thimac names are single segments; nesting builds the dotted id", name.span);
        }
        let mut value_type = None;
        if self.eat(&Tok::Colon) {
            value_type = Some(self.parse_keyword::<ValueType>("type")?);
        }
        let display = self.string();
        let mut decl = ThimacDecl {
            name,
            display,
            role: Role::Generic,
            storage: false,
            key: false,
            value_type,
            cardinality: None,
            columns: None,
            body: Vec::new(),
        };
        let mut role_seen = false;
        while let Tok::Word(w) = self.peek().clone() {
            let span = self.span();
            match w.as_str() {
                "store" => {
                    self.bump();
                    decl.storage = true;
                }
                "key" => {
                    self.bump();
                    decl.key = true;
                }
                "role" | "card" | "cols" | "type" => {
                    self.bump();
                    self.expect(Tok::Eq, "`=`")?;
                    match w.as_str() {
                        "role" => {
                            decl.role = self.parse_keyword::<Role>("role")?;
                            role_seen = true;
                        }
                        "card" => decl.cardinality = Some(self.parse_keyword::<Cardinality>("cardinality")?),
                        "type" => decl.value_type = Some(self.parse_keyword::<ValueType>("type")?),
                        _ => {
                            let cols = self.attr_value("a column list")?;
                            decl.columns = Some(
                                cols.value.split(',').map(|c| c.trim().to_owned()).filter(|c| !c.is_empty()).collect(),
                            );
                        }
                    }
                }
                _ => return self.error(format!("unknown thimac attribute `{w}`"), span),
            }
        }
        if !role_seen {
            let span = decl.name.span;
            return self.error(format!("thimac `{}` needs an explicit `role=`", decl.name.value), span);
        }
        self.expect(Tok::LBrace, "`{`")?;
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            let before = self.pos;
            match self.body_item() {
                Ok(item) => decl.body.push(item),
                Err(Reported) => {
                    self.synchronize();
                    if self.pos == before {
                        break;
                    }
                }
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        self.eat(&Tok::Semi);
        Ok(decl)
    }

    fn body_item(&mut self) -> PResult<BodyItem> {
        let Tok::Word(w) = self.peek().clone() else {
            return self.unexpected("an action, thimac, or arc");
        };
        if self.starts_arc() {
            return self.arc_stmt().map(BodyItem::Arc);
        }
        if w == "thimac" {
            return self.thimac().map(BodyItem::Thimac);
        }
        match w.parse::<ActionKind>() {
            Ok(kind) => self.action(kind).map(BodyItem::Action),
            Err(_) => {
                self.unexpected("an action kind (create, process, release, transfer, receive), `thimac`, or an arc")
            }
        }
    }

    fn action(&mut self, kind: ActionKind) -> PResult<ActionDecl> {
        let kind_span = self.bump().span;
        let mut decl = ActionDecl { kind, kind_span, name: None, label: None, storage: false, op: None, column: None };
        if let Tok::Word(w) = self.peek() {
            let is_attr = matches!(self.peek_at(1), Tok::Eq);
            if !is_attr && w != "store" {
                decl.name = Some(self.ident("an action name")?);
            }
        }
        decl.label = self.string();
        while let Tok::Word(w) = self.peek().clone() {
            let span = self.span();
            match w.as_str() {
                "store" => {
                    self.bump();
                    decl.storage = true;
                }
                "op" => {
                    self.bump();
                    self.expect(Tok::Eq, "`=`")?;
                    decl.op = Some(self.parse_keyword::<Op>("op")?);
                }
                "col" => {
                    self.bump();
                    self.expect(Tok::Eq, "`=`")?;
                    decl.column = Some(self.attr_value("a column")?.value);
                }
                _ => return self.error(format!("unknown action attribute `{w}`"), span),
            }
        }
        if !matches!(self.peek(), Tok::RBrace) {
            self.expect(Tok::Semi, "`;`")?;
        }
        Ok(decl)
    }

    fn arc_stmt(&mut self) -> PResult<ArcStmt> {
        let mut stmt =
            ArcStmt { refs: vec![self.ident("a node reference")?], arrows: Vec::new(), guard: None, bulk: false };
        loop {
            let arrow = match self.peek() {
                Tok::Flow => Arrow::Flow,
                Tok::Trigger => Arrow::Trigger,
                Tok::Bulk => Arrow::Bulk,
                _ => break,
            };
            self.bump();
            stmt.arrows.push(arrow);
            stmt.refs.push(self.ident("a node reference")?);
        }
        if stmt.arrows.is_empty() {
            return self.unexpected("`->`, `~>`, or `=>`");
        }
        loop {
            if self.is_word("when") {
                self.bump();
                stmt.guard = Some(self.attr_value("an outcome label")?.value);
            } else if self.is_word("bulk") {
                self.bump();
                stmt.bulk = true;
            } else {
                break;
            }
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(stmt)
    }

    fn event(&mut self) -> PResult<EventDecl> {
        self.keyword("event")?;
        let id = self.ident("an event id")?;
        let description = self.string();
        let halt = if self.is_word("halt") {
            self.bump();
            true
        } else {
            false
        };
        self.expect(Tok::LBrace, "`{`")?;
        self.keyword("region")?;
        self.expect(Tok::Colon, "`:`")?;
        let mut region = Vec::new();
        if !matches!(self.peek(), Tok::RBrace | Tok::Semi) {
            region.push(self.ident("a node reference")?);
            while self.eat(&Tok::Comma) {
                region.push(self.ident("a node reference")?);
            }
        }
        self.eat(&Tok::Semi);
        self.expect(Tok::RBrace, "`}`")?;
        self.eat(&Tok::Semi);
        Ok(EventDecl { id, description, halt, region })
    }

    fn steps(&mut self) -> PResult<Vec<StepAst>> {
        let mut steps = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            if self.is_word("repeat") {
                self.bump();
                let mut max = None;
                if self.is_word("max") {
                    self.bump();
                    self.expect(Tok::Eq, "`=`")?;
                    match self.peek().clone() {
                        Tok::Int(n) if n >= 0 && n <= u32::MAX as i64 => {
                            self.bump();
                            max = Some(n as u32);
                        }
                        _ => return self.unexpected("an iteration bound"),
                    }
                }
                self.expect(Tok::LBrace, "`{`")?;
                let body = self.steps()?;
                self.expect(Tok::RBrace, "`}`")?;
                self.keyword("until")?;
                let until = self.ident("an event id")?;
                self.expect(Tok::Semi, "`;`")?;
                steps.push(StepAst::Repeat { max, body, until });
            } else {
                let ev = self.ident("an event id")?;
                self.expect(Tok::Semi, "`;`")?;
                steps.push(StepAst::Event(ev));
            }
        }
        Ok(steps)
    }
}
