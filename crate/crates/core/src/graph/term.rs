//! Graph atoms: IRIs, literals and terms.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::numeric;

pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("invalid IRI {0:?}: {1}")]
    InvalidIri(String, &'static str),
    #[error("invalid {datatype} lexical form {lexical:?}")]
    InvalidLexical { lexical: String, datatype: Datatype },
    #[error("invalid language tag {0:?}")]
    InvalidLanguage(String),
    #[error("language tags are only allowed on string literals")]
    LanguageOnNonString,
}

/// An absolute IRI. Locally minted IRIs have the shape
/// `<namespace>/<segment>/<local id>`; external IRIs are kept verbatim.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn parse(value: impl AsRef<str>) -> Result<Self, TermError> {
        let value = value.as_ref();
        validate_iri(value)?;
        Ok(Iri(Arc::from(value)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Last path segment, i.e. the local id for minted IRIs.
    pub fn local_part(&self) -> &str {
        self.0.rsplit(['/', '#']).next().unwrap_or(&self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Iri {
    type Error = TermError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::parse(value)
    }
}

impl From<Iri> for String {
    fn from(value: Iri) -> Self {
        value.0.to_string()
    }
}

fn validate_iri(value: &str) -> Result<(), TermError> {
    let err = |reason| Err(TermError::InvalidIri(value.to_string(), reason));
    let Some(colon) = value.find(':') else {
        return err("missing scheme");
    };
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return err("scheme must start with a letter"),
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        return err("invalid scheme character");
    }
    if colon + 1 == value.len() {
        return err("empty hierarchical part");
    }
    for c in value.chars() {
        if c.is_whitespace() || c.is_control() {
            return err("contains whitespace or control character");
        }
        if matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') {
            return err("contains a character forbidden in IRIs");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    String,
    Integer,
    Decimal,
    Boolean,
}

impl Datatype {
    pub const ALL: [Datatype; 4] = [
        Datatype::String,
        Datatype::Integer,
        Datatype::Decimal,
        Datatype::Boolean,
    ];

    pub fn iri(self) -> &'static str {
        match self {
            Datatype::String => "http://www.w3.org/2001/XMLSchema#string",
            Datatype::Integer => "http://www.w3.org/2001/XMLSchema#integer",
            Datatype::Decimal => "http://www.w3.org/2001/XMLSchema#decimal",
            Datatype::Boolean => "http://www.w3.org/2001/XMLSchema#boolean",
        }
    }

    pub fn from_iri(iri: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.iri() == iri)
    }

    pub fn name(self) -> &'static str {
        match self {
            Datatype::String => "string",
            Datatype::Integer => "integer",
            Datatype::Decimal => "decimal",
            Datatype::Boolean => "boolean",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Datatype::Integer | Datatype::Decimal)
    }

    fn accepts(self, lexical: &str) -> bool {
        match self {
            Datatype::String => true,
            Datatype::Integer => numeric::is_integer(lexical),
            Datatype::Decimal => numeric::is_decimal(lexical),
            Datatype::Boolean => matches!(lexical, "true" | "false"),
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A typed literal value. Construction validates the lexical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    lexical: String,
    datatype: Datatype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lang: Option<String>,
}

impl Literal {
    pub fn new(
        lexical: impl Into<String>,
        datatype: Datatype,
        lang: Option<String>,
    ) -> Result<Self, TermError> {
        let lexical = lexical.into();
        if !datatype.accepts(&lexical) {
            return Err(TermError::InvalidLexical { lexical, datatype });
        }
        if let Some(tag) = &lang {
            if datatype != Datatype::String {
                return Err(TermError::LanguageOnNonString);
            }
            if !is_language_tag(tag) {
                return Err(TermError::InvalidLanguage(tag.clone()));
            }
        }
        Ok(Literal {
            lexical,
            datatype,
            lang,
        })
    }

    pub fn string(value: impl Into<String>) -> Self {
        Literal {
            lexical: value.into(),
            datatype: Datatype::String,
            lang: None,
        }
    }

    pub fn decimal(lexical: impl Into<String>) -> Result<Self, TermError> {
        Self::new(lexical, Datatype::Decimal, None)
    }

    pub fn integer(value: i64) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: Datatype::Integer,
            lang: None,
        }
    }

    pub fn boolean(value: bool) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: Datatype::Boolean,
            lang: None,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }

    pub fn lang(&self) -> Option<&str> {
        self.lang.as_deref()
    }

    pub fn is_numeric(&self) -> bool {
        self.datatype.is_numeric()
    }

    /// Lexical form with redundant zeros stripped for numeric literals.
    pub fn canonical_lexical(&self) -> String {
        if self.is_numeric() {
            numeric::canonical(&self.lexical)
        } else {
            self.lexical.clone()
        }
    }
}

pub fn is_language_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let first = parts.next().unwrap_or_default();
    !first.is_empty()
        && first.chars().all(|c| c.is_ascii_alphabetic())
        && parts.all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

/// Either an IRI or a literal. Only objects may be literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            Term::Iri(_) => None,
        }
    }

    /// Ordering used by query results: IRIs first (byte order), then
    /// numeric literals by value, booleans, and strings by lexical form.
    pub fn value_cmp(&self, other: &Term) -> Ordering {
        fn rank(t: &Term) -> u8 {
            match t {
                Term::Iri(_) => 0,
                Term::Literal(l) if l.is_numeric() => 1,
                Term::Literal(l) if l.datatype() == Datatype::Boolean => 2,
                Term::Literal(_) => 3,
            }
        }
        match (self, other) {
            (Term::Iri(a), Term::Iri(b)) => a.as_str().as_bytes().cmp(b.as_str().as_bytes()),
            (Term::Literal(a), Term::Literal(b)) if rank(self) == rank(other) => {
                let primary = if a.is_numeric() {
                    numeric::compare(a.lexical(), b.lexical())
                } else {
                    a.lexical().as_bytes().cmp(b.lexical().as_bytes())
                };
                primary
                    .then_with(|| a.datatype().cmp(&b.datatype()))
                    .then_with(|| a.lexical().as_bytes().cmp(b.lexical().as_bytes()))
                    .then_with(|| a.lang().cmp(&b.lang()))
            }
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

impl From<Iri> for Term {
    fn from(value: Iri) -> Self {
        Term::Iri(value)
    }
}

impl From<Literal> for Term {
    fn from(value: Literal) -> Self {
        Term::Literal(value)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Literal(lit) => match (lit.lang(), lit.datatype()) {
                (Some(lang), _) => write!(f, "{:?}@{lang}", lit.lexical()),
                (None, Datatype::String) => write!(f, "{:?}", lit.lexical()),
                (None, dt) => write!(f, "{:?}^^xsd:{}", lit.lexical(), dt.name()),
            },
        }
    }
}
