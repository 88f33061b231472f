//! N-Triples reading and writing.
//!
//! The writer emits one `<s> <p> <o> .` line per triple. String literals
//! without a language tag omit the `xsd:string` datatype; every other
//! literal carries `^^<datatype>` or `@lang`. The reader accepts that output
//! plus blank lines, `#` comments and the full set of N-Triples escapes.

use std::fmt::Write as _;
use std::iter::Peekable;
use std::str::CharIndices;

use crate::graph::{is_language_tag, Datatype, Iri, Literal, Term, Triple};

use super::ParseError;

pub fn escape_literal(out: &mut String, value: &str) {
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c as u32 == 0x7F => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
}

pub(crate) fn write_literal_suffix(out: &mut String, lit: &Literal) {
    match (lit.lang(), lit.datatype()) {
        (Some(lang), _) => {
            out.push('@');
            out.push_str(lang);
        }
        (None, Datatype::String) => {}
        (None, dt) => {
            out.push_str("^^<");
            out.push_str(dt.iri());
            out.push('>');
        }
    }
}

pub fn write_term(out: &mut String, term: &Term) {
    match term {
        Term::Iri(iri) => {
            out.push('<');
            out.push_str(iri.as_str());
            out.push('>');
        }
        Term::Literal(lit) => {
            out.push('"');
            escape_literal(out, lit.lexical());
            out.push('"');
            write_literal_suffix(out, lit);
        }
    }
}

pub fn triple_line(triple: &Triple) -> String {
    let mut line = String::with_capacity(96);
    line.push('<');
    line.push_str(triple.subject.as_str());
    line.push_str("> <");
    line.push_str(triple.predicate.as_str());
    line.push_str("> ");
    write_term(&mut line, &triple.object);
    line.push_str(" .");
    line
}

/// Serializes triples, one per line. With `sort` the lines are ordered by
/// bytes, which makes the output a function of the triple set alone.
pub fn write_ntriples<'a>(triples: impl IntoIterator<Item = &'a Triple>, sort: bool) -> String {
    let mut lines: Vec<String> = triples.into_iter().map(triple_line).collect();
    if sort {
        lines.sort_unstable();
        lines.dedup();
    }
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

struct LineParser<'a> {
    line_no: usize,
    text: &'a str,
    chars: Peekable<CharIndices<'a>>,
}

impl<'a> LineParser<'a> {
    fn new(line_no: usize, text: &'a str) -> Self {
        LineParser {
            line_no,
            text,
            chars: text.char_indices().peekable(),
        }
    }

    fn column(&mut self) -> usize {
        let offset = self.chars.peek().map_or(self.text.len(), |&(i, _)| i);
        self.text[..offset].chars().count() + 1
    }

    fn error<T>(&mut self, reason: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: self.line_no,
            column: self.column(),
            reason: reason.into(),
        })
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, ' ' | '\t' | '\r'))) {
            self.chars.next();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn expect(&mut self, want: char, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == want => {
                self.chars.next();
                Ok(())
            }
            Some(c) => self.error(format!("expected {what}, found {c:?}")),
            None => self.error(format!("expected {what}, found end of line")),
        }
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, ParseError> {
        let mut value = 0u32;
        for _ in 0..digits {
            match self.peek().and_then(|c| c.to_digit(16)) {
                Some(d) => {
                    value = value * 16 + d;
                    self.chars.next();
                }
                None => return self.error("invalid hexadecimal escape"),
            }
        }
        match char::from_u32(value) {
            Some(c) => Ok(c),
            None => self.error(format!("escape U+{value:X} is not a scalar value")),
        }
    }

    fn iri(&mut self) -> Result<Iri, ParseError> {
        let start_col = self.column();
        self.expect('<', "'<'")?;
        let mut value = String::new();
        loop {
            match self.peek() {
                None => return self.error("unterminated IRI"),
                Some('>') => {
                    self.chars.next();
                    break;
                }
                Some('\\') => {
                    self.chars.next();
                    let c = match self.peek() {
                        Some('u') => {
                            self.chars.next();
                            self.hex_escape(4)?
                        }
                        Some('U') => {
                            self.chars.next();
                            self.hex_escape(8)?
                        }
                        _ => return self.error("invalid escape in IRI"),
                    };
                    value.push(c);
                }
                Some(c) if c <= ' ' || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return self.error(format!("character {c:?} not allowed in IRI"));
                }
                Some(c) => {
                    self.chars.next();
                    value.push(c);
                }
            }
        }
        Iri::parse(&value).map_err(|e| ParseError {
            line: self.line_no,
            column: start_col,
            reason: e.to_string(),
        })
    }

    fn subject_or_predicate(&mut self, role: &str) -> Result<Iri, ParseError> {
        match self.peek() {
            Some('<') => self.iri(),
            Some('_') => self.error("blank nodes are not supported"),
            Some(c) => self.error(format!("expected {role} IRI, found {c:?}")),
            None => self.error(format!("expected {role}, found end of line")),
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let start_col = self.column();
        self.expect('"', "'\"'")?;
        let mut lexical = String::new();
        loop {
            match self.peek() {
                None => return self.error("unterminated literal"),
                Some('"') => {
                    self.chars.next();
                    break;
                }
                Some('\\') => {
                    self.chars.next();
                    let c = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{C}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => {
                            self.chars.next();
                            lexical.push(self.hex_escape(4)?);
                            continue;
                        }
                        Some('U') => {
                            self.chars.next();
                            lexical.push(self.hex_escape(8)?);
                            continue;
                        }
                        _ => return self.error("invalid escape in literal"),
                    };
                    self.chars.next();
                    lexical.push(c);
                }
                Some(c @ ('\n' | '\r')) => {
                    return self.error(format!("raw {c:?} inside literal"));
                }
                Some(c) => {
                    self.chars.next();
                    lexical.push(c);
                }
            }
        }
        let (datatype, lang) = match self.peek() {
            Some('@') => {
                self.chars.next();
                let mut tag = String::new();
                while let Some(c) = self
                    .peek()
                    .filter(|c| c.is_ascii_alphanumeric() || *c == '-')
                {
                    tag.push(c);
                    self.chars.next();
                }
                if !is_language_tag(&tag) {
                    return self.error(format!("invalid language tag {tag:?}"));
                }
                (Datatype::String, Some(tag))
            }
            Some('^') => {
                self.chars.next();
                self.expect('^', "'^^'")?;
                let dt_col = self.column();
                let iri = self.iri()?;
                match Datatype::from_iri(iri.as_str()) {
                    Some(dt) => (dt, None),
                    None => {
                        return Err(ParseError {
                            line: self.line_no,
                            column: dt_col,
                            reason: format!("unsupported datatype <{iri}>"),
                        })
                    }
                }
            }
            _ => (Datatype::String, None),
        };
        Literal::new(lexical, datatype, lang).map_err(|e| ParseError {
            line: self.line_no,
            column: start_col,
            reason: e.to_string(),
        })
    }

    fn object(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri()?)),
            Some('"') => Ok(Term::Literal(self.literal()?)),
            Some('_') => self.error("blank nodes are not supported"),
            Some(c) => self.error(format!("expected object, found {c:?}")),
            None => self.error("expected object, found end of line"),
        }
    }

    /// Parses one line; `Ok(None)` for blank and comment-only lines.
    fn statement(&mut self) -> Result<Option<Triple>, ParseError> {
        self.skip_ws();
        if matches!(self.peek(), None | Some('#')) {
            return Ok(None);
        }
        let subject = self.subject_or_predicate("subject")?;
        self.skip_ws();
        let predicate = self.subject_or_predicate("predicate")?;
        self.skip_ws();
        let object = self.object()?;
        self.skip_ws();
        self.expect('.', "'.'")?;
        self.skip_ws();
        match self.peek() {
            None | Some('#') => Ok(Some(Triple {
                subject,
                predicate,
                object,
            })),
            Some(c) => self.error(format!("unexpected {c:?} after statement")),
        }
    }
}

/// Parses an N-Triples document. Stops at the first malformed line.
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        if let Some(t) = LineParser::new(i + 1, line).statement()? {
            out.push(t);
        }
    }
    Ok(out)
}
