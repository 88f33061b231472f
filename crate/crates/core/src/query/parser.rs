//! Tokenizer and recursive-descent parser for the `SELECT` subset.
//!
//! Positions in errors are byte offsets into the query text.

use indexmap::IndexMap;

use crate::graph::{numeric, Datatype, Iri, Literal, Term, RDF_TYPE};

use super::{
    CompareOp, Direction, Filter, OrderBy, PatternTerm, Projection, QueryError, SelectQuery,
    TriplePattern,
};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Var(String),
    IriRef(String),
    PName(String, String),
    Str(String),
    LangTag(String),
    Number(String),
    Punct(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Var(v) => format!("variable ?{v}"),
            Tok::IriRef(i) => format!("<{i}>"),
            Tok::PName(p, l) => format!("`{p}:{l}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::LangTag(t) => format!("language tag @{t}"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of query".into(),
        }
    }
}

fn syntax(position: usize, reason: impl Into<String>) -> QueryError {
    QueryError::Syntax {
        position,
        reason: reason.into(),
    }
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-')
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.text[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
        &self.text[start..self.pos]
    }

    fn skip_trivia(&mut self) {
        loop {
            self.take_while(char::is_whitespace);
            if self.peek() == Some('#') {
                self.take_while(|c| c != '\n');
            } else {
                return;
            }
        }
    }

    /// `<...>` is an IRI when it closes before any whitespace; otherwise the
    /// `<` is a comparison operator.
    fn iri_ahead(&self) -> Option<usize> {
        let rest = &self.text[self.pos + 1..];
        for (i, c) in rest.char_indices() {
            match c {
                '>' => return Some(i),
                c if c.is_whitespace()
                    || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') =>
                {
                    return None
                }
                _ => {}
            }
        }
        None
    }

    fn string(&mut self, start: usize) -> Result<Tok, QueryError> {
        let quote = self.bump().expect("quote");
        let mut out = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(syntax(start, "unterminated string literal"));
            };
            match c {
                c if c == quote => break,
                '\n' | '\r' => return Err(syntax(start, "line break in string literal")),
                '\\' => {
                    let esc_pos = self.pos - 1;
                    match self.bump() {
                        Some('n') => out.push('\n'),
                        Some('t') => out.push('\t'),
                        Some('r') => out.push('\r'),
                        Some('"') => out.push('"'),
                        Some('\'') => out.push('\''),
                        Some('\\') => out.push('\\'),
                        Some(u @ ('u' | 'U')) => {
                            let len = if u == 'u' { 4 } else { 8 };
                            let hex = self.text.get(self.pos..self.pos + len).unwrap_or("");
                            let ch = u32::from_str_radix(hex, 16)
                                .ok()
                                .filter(|_| {
                                    hex.len() == len && hex.bytes().all(|b| b.is_ascii_hexdigit())
                                })
                                .and_then(char::from_u32)
                                .ok_or_else(|| syntax(esc_pos, "invalid \\u escape"))?;
                            self.pos += len;
                            out.push(ch);
                        }
                        _ => return Err(syntax(esc_pos, "invalid escape sequence")),
                    }
                }
                c => out.push(c),
            }
        }
        Ok(Tok::Str(out))
    }

    fn number(&mut self, start: usize) -> Result<Tok, QueryError> {
        if matches!(self.peek(), Some('+' | '-')) {
            self.bump();
        }
        self.take_while(|c| c.is_ascii_digit());
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            self.take_while(|c| c.is_ascii_digit());
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            return Err(syntax(start, "floating-point literals are not supported"));
        }
        let lexical = &self.text[start..self.pos];
        if !numeric::is_decimal(lexical) {
            return Err(syntax(start, format!("invalid number {lexical:?}")));
        }
        Ok(Tok::Number(lexical.to_string()))
    }

    fn next(&mut self) -> Result<(Tok, usize), QueryError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::Eof, start));
        };
        let tok = match c {
            '?' | '$' => {
                self.bump();
                let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                let valid = name.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_');
                if !valid {
                    return Err(syntax(start, "invalid variable name"));
                }
                Tok::Var(name.to_string())
            }
            '<' => match self.iri_ahead() {
                Some(len) => {
                    let iri = &self.text[self.pos + 1..self.pos + 1 + len];
                    self.pos += len + 2;
                    Tok::IriRef(iri.to_string())
                }
                None => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                        Tok::Punct("<=")
                    } else {
                        Tok::Punct("<")
                    }
                }
            },
            '>' => {
                self.bump();
                if self.peek() == Some('=') {
                    self.bump();
                    Tok::Punct(">=")
                } else {
                    Tok::Punct(">")
                }
            }
            '!' => {
                self.bump();
                if self.bump() != Some('=') {
                    return Err(syntax(start, "expected `!=`"));
                }
                Tok::Punct("!=")
            }
            '&' => {
                self.bump();
                if self.bump() != Some('&') {
                    return Err(syntax(start, "expected `&&`"));
                }
                Tok::Punct("&&")
            }
            '^' => {
                self.bump();
                if self.bump() != Some('^') {
                    return Err(syntax(start, "expected `^^`"));
                }
                Tok::Punct("^^")
            }
            '"' | '\'' => self.string(start)?,
            '@' => {
                self.bump();
                let tag = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                if tag.is_empty() {
                    return Err(syntax(start, "empty language tag"));
                }
                Tok::LangTag(tag.to_string())
            }
            '{' | '}' | '(' | ')' | '.' | '*' | '=' | ',' | ';' => {
                self.bump();
                Tok::Punct(match c {
                    '{' => "{",
                    '}' => "}",
                    '(' => "(",
                    ')' => ")",
                    '.' => ".",
                    '*' => "*",
                    '=' => "=",
                    ',' => ",",
                    _ => ";",
                })
            }
            c if c.is_ascii_digit() || c == '+' || c == '-' => self.number(start)?,
            c if is_name_start(c) || c == ':' => {
                let prefix = self.take_while(|c| is_name_char(c) || c == '.');
                if self.peek() == Some(':') {
                    self.bump();
                    let local_start = self.pos;
                    self.take_while(|c| is_name_char(c) || matches!(c, '.' | '%'));
                    // A trailing dot ends the triple, not the name.
                    while self.text[local_start..self.pos].ends_with('.') {
                        self.pos -= 1;
                    }
                    let local = &self.text[local_start..self.pos];
                    Tok::PName(prefix.to_string(), local.to_string())
                } else {
                    let word = prefix.trim_end_matches('.');
                    self.pos = start + word.len();
                    Tok::Word(word.to_string())
                }
            }
            other => return Err(syntax(start, format!("unexpected character {other:?}"))),
        };
        Ok((tok, start))
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, QueryError> {
    let mut lexer = Lexer { text, pos: 0 };
    let mut toks = Vec::new();
    loop {
        let (tok, pos) = lexer.next()?;
        let end = tok == Tok::Eof;
        toks.push((tok, pos));
        if end {
            return Ok(toks);
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    i: usize,
    prefixes: IndexMap<String, String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> usize {
        self.toks[self.i].1
    }

    fn advance(&mut self) -> (Tok, usize) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        let hit = self.at_keyword(kw);
        if hit {
            self.advance();
        }
        hit
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.at_punct(p);
        if hit {
            self.advance();
        }
        hit
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), QueryError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn unexpected(&self, expected: &str) -> QueryError {
        syntax(
            self.pos(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect_var(&mut self) -> Result<String, QueryError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.advance();
                Ok(v)
            }
            _ => Err(self.unexpected("a variable")),
        }
    }

    fn iri(&self, raw: &str, pos: usize) -> Result<Iri, QueryError> {
        Iri::parse(raw).map_err(|e| syntax(pos, e.to_string()))
    }

    fn expand(&self, prefix: &str, local: &str, pos: usize) -> Result<Iri, QueryError> {
        let ns = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| QueryError::UnknownPrefix(prefix.to_string()))?;
        self.iri(&format!("{ns}{local}"), pos)
    }

    fn prologue(&mut self) -> Result<(), QueryError> {
        while self.eat_keyword("PREFIX") {
            let (tok, pos) = self.advance();
            let Tok::PName(name, local) = tok else {
                return Err(syntax(pos, "expected a prefix name such as `ex:`"));
            };
            if !local.is_empty() {
                return Err(syntax(pos, "prefix declaration must end with `:`"));
            }
            let (tok, pos) = self.advance();
            let Tok::IriRef(ns) = tok else {
                return Err(syntax(pos, "expected `<namespace IRI>`"));
            };
            self.iri(&ns, pos)?;
            self.prefixes.insert(name, ns);
        }
        Ok(())
    }

    /// A constant or variable in a pattern or filter.
    fn term(&mut self, predicate_position: bool) -> Result<PatternTerm, QueryError> {
        let (tok, pos) = self.advance();
        let term: Term = match tok {
            Tok::Var(v) => return Ok(PatternTerm::Var(v)),
            Tok::IriRef(raw) => self.iri(&raw, pos)?.into(),
            Tok::PName(prefix, local) => self.expand(&prefix, &local, pos)?.into(),
            Tok::Word(w) if w == "a" && predicate_position => {
                Iri::parse(RDF_TYPE).expect("static IRI").into()
            }
            Tok::Word(w) if w == "true" || w == "false" => Literal::boolean(w == "true").into(),
            Tok::Number(n) => {
                let dt = if numeric::is_integer(&n) {
                    Datatype::Integer
                } else {
                    Datatype::Decimal
                };
                Literal::new(n, dt, None)
                    .map_err(|e| syntax(pos, e.to_string()))?
                    .into()
            }
            Tok::Str(lexical) => {
                let (datatype, lang) = match self.peek().clone() {
                    Tok::LangTag(tag) => {
                        self.advance();
                        (Datatype::String, Some(tag))
                    }
                    Tok::Punct("^^") => {
                        self.advance();
                        let (tok, dt_pos) = self.advance();
                        let iri = match tok {
                            Tok::IriRef(raw) => self.iri(&raw, dt_pos)?,
                            Tok::PName(p, l) => self.expand(&p, &l, dt_pos)?,
                            _ => return Err(syntax(dt_pos, "expected a datatype IRI")),
                        };
                        let dt = Datatype::from_iri(iri.as_str()).ok_or_else(|| {
                            syntax(dt_pos, format!("unsupported datatype <{iri}>"))
                        })?;
                        (dt, None)
                    }
                    _ => (Datatype::String, None),
                };
                Literal::new(lexical, datatype, lang)
                    .map_err(|e| syntax(pos, e.to_string()))?
                    .into()
            }
            other => {
                return Err(syntax(
                    pos,
                    format!("expected a term or variable, found {}", other.describe()),
                ))
            }
        };
        Ok(PatternTerm::Term(term))
    }

    fn comparison(&mut self) -> Result<Filter, QueryError> {
        let pos = self.pos();
        let left = self.term(false)?;
        let op = match self.advance() {
            (Tok::Punct("="), _) => CompareOp::Eq,
            (Tok::Punct("!="), _) => CompareOp::Ne,
            (Tok::Punct("<"), _) => CompareOp::Lt,
            (Tok::Punct("<="), _) => CompareOp::Le,
            (Tok::Punct(">"), _) => CompareOp::Gt,
            (Tok::Punct(">="), _) => CompareOp::Ge,
            (tok, p) => {
                return Err(syntax(
                    p,
                    format!("expected a comparison operator, found {}", tok.describe()),
                ))
            }
        };
        let right = self.term(false)?;
        match (left, right) {
            (PatternTerm::Var(var), operand) => Ok(Filter { var, op, operand }),
            (operand, PatternTerm::Var(var)) => Ok(Filter {
                var,
                op: op.flipped(),
                operand,
            }),
            _ => Err(syntax(pos, "a filter must compare at least one variable")),
        }
    }

    fn filter(&mut self, filters: &mut Vec<Filter>) -> Result<(), QueryError> {
        self.expect_punct("(")?;
        loop {
            filters.push(self.comparison()?);
            if !self.eat_punct("&&") {
                break;
            }
        }
        self.expect_punct(")")
    }

    fn group(&mut self) -> Result<(Vec<TriplePattern>, Vec<Filter>), QueryError> {
        self.expect_punct("{")?;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        loop {
            if self.eat_punct("}") {
                break;
            }
            if self.eat_keyword("FILTER") {
                self.filter(&mut filters)?;
                self.eat_punct(".");
                continue;
            }
            if self.at_punct(";") || self.at_punct(",") {
                return Err(syntax(
                    self.pos(),
                    "`;` and `,` abbreviations are not supported",
                ));
            }
            let s = self.term(false)?;
            let p = self.term(true)?;
            let o = self.term(false)?;
            patterns.push(TriplePattern::new(s, p, o));
            if !self.eat_punct(".") && !self.at_punct("}") && !self.at_keyword("FILTER") {
                return Err(self.unexpected("`.` or `}`"));
            }
        }
        Ok((patterns, filters))
    }

    fn query(&mut self) -> Result<SelectQuery, QueryError> {
        self.prologue()?;
        self.expect_keyword("SELECT")?;
        let distinct = self.eat_keyword("DISTINCT");
        let projection = if self.eat_punct("*") {
            Projection::All
        } else {
            let mut vars = Vec::new();
            while let Tok::Var(v) = self.peek().clone() {
                self.advance();
                vars.push(v);
            }
            if vars.is_empty() {
                return Err(self.unexpected("projected variables or `*`"));
            }
            Projection::Vars(vars)
        };
        self.eat_keyword("WHERE");
        let (patterns, filters) = self.group()?;

        let mut order_by = None;
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            let direction = if self.eat_keyword("DESC") {
                Some(Direction::Desc)
            } else if self.eat_keyword("ASC") {
                Some(Direction::Asc)
            } else {
                None
            };
            let var = if direction.is_some() || self.at_punct("(") {
                self.expect_punct("(")?;
                let v = self.expect_var()?;
                self.expect_punct(")")?;
                v
            } else {
                self.expect_var()?
            };
            order_by = Some(OrderBy {
                var,
                direction: direction.unwrap_or_default(),
            });
        }

        let mut limit = None;
        if self.eat_keyword("LIMIT") {
            let (tok, pos) = self.advance();
            match tok {
                Tok::Number(n) if numeric::is_integer(&n) && !n.starts_with(['-', '+']) => {
                    limit = Some(n.parse().map_err(|_| syntax(pos, "LIMIT is too large"))?);
                }
                other => {
                    return Err(syntax(
                        pos,
                        format!(
                            "expected a non-negative integer, found {}",
                            other.describe()
                        ),
                    ))
                }
            }
        }
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("end of query"));
        }
        Ok(SelectQuery {
            prefixes: std::mem::take(&mut self.prefixes),
            projection,
            patterns,
            filters,
            distinct,
            order_by,
            limit,
        })
    }
}

/// Parses a `SELECT` query and checks that every variable it projects,
/// filters or orders by is bound by a pattern.
pub fn parse_query(text: &str) -> Result<SelectQuery, QueryError> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        i: 0,
        prefixes: IndexMap::new(),
    };
    let query = parser.query()?;
    query.check_bound()?;
    Ok(query)
}
