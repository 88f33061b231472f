//! A conjunctive subset of SPARQL `SELECT`: basic graph patterns, simple
//! comparison filters, `DISTINCT`, one `ORDER BY` key and `LIMIT`.
//!
//! Results are bags. Rows always come out in a canonical order — by the
//! `ORDER BY` key when there is one, then by the projected values — so that
//! `LIMIT` selects a well-defined prefix.

mod engine;
mod parser;

use std::cmp::Ordering;
use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::graph::{numeric, Term};

pub use engine::{execute, plan};
pub use parser::parse_query;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at position {position}: {reason}")]
    Syntax { position: usize, reason: String },
    #[error("unknown prefix {0:?}")]
    UnknownPrefix(String),
    #[error("variable ?{0} does not occur in any triple pattern")]
    UnboundVariable(String),
    #[error("cannot order {left} against {right}")]
    TypeMismatch { left: String, right: String },
}

/// Subject, predicate or object slot of a pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    /// Variable name without the leading `?`.
    Var(String),
    Term(Term),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Term(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub s: PatternTerm,
    pub p: PatternTerm,
    pub o: PatternTerm,
}

impl TriplePattern {
    pub fn new(s: PatternTerm, p: PatternTerm, o: PatternTerm) -> Self {
        TriplePattern { s, p, o }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        [&self.s, &self.p, &self.o]
            .into_iter()
            .filter_map(PatternTerm::var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    /// The operator with its operands swapped: `a < b` ⇔ `b > a`.
    pub fn flipped(self) -> Self {
        match self {
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::Le => CompareOp::Ge,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::Ge => CompareOp::Le,
            op => op,
        }
    }

    fn is_ordering(self) -> bool {
        !matches!(self, CompareOp::Eq | CompareOp::Ne)
    }
}

/// `?var op operand`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Filter {
    pub var: String,
    pub op: CompareOp,
    pub operand: PatternTerm,
}

impl Filter {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.var.as_str()).chain(self.operand.var())
    }
}

/// Evaluates `left op right`.
///
/// Equality is value equality for numbers and term identity otherwise.
/// Ordering compares numbers by value, IRIs and strings by bytes; ordering
/// a literal against an IRI is a type error.
pub fn compare_terms(left: &Term, op: CompareOp, right: &Term) -> Result<bool, QueryError> {
    let both_numeric = matches!((left, right), (Term::Literal(a), Term::Literal(b))
        if a.is_numeric() && b.is_numeric());
    let ordering = if both_numeric {
        let (a, b) = (left.as_literal().unwrap(), right.as_literal().unwrap());
        numeric::compare(a.lexical(), b.lexical())
    } else if op.is_ordering() {
        if matches!(left, Term::Iri(_)) != matches!(right, Term::Iri(_)) {
            return Err(QueryError::TypeMismatch {
                left: nt(left),
                right: nt(right),
            });
        }
        left.value_cmp(right)
    } else if left == right {
        Ordering::Equal
    } else {
        // Only `=`/`!=` reach here; any non-equal ordering will do.
        Ordering::Less
    };
    Ok(match op {
        CompareOp::Eq => ordering == Ordering::Equal,
        CompareOp::Ne => ordering != Ordering::Equal,
        CompareOp::Lt => ordering == Ordering::Less,
        CompareOp::Le => ordering != Ordering::Greater,
        CompareOp::Gt => ordering == Ordering::Greater,
        CompareOp::Ge => ordering != Ordering::Less,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderBy {
    pub var: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Projection {
    All,
    Vars(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectQuery {
    pub prefixes: IndexMap<String, String>,
    pub projection: Projection,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Filter>,
    pub distinct: bool,
    pub order_by: Option<OrderBy>,
    pub limit: Option<usize>,
}

impl SelectQuery {
    /// Pattern variables in order of first appearance.
    pub fn pattern_vars(&self) -> Vec<String> {
        let mut vars: Vec<String> = Vec::new();
        for v in self.patterns.iter().flat_map(TriplePattern::vars) {
            if !vars.iter().any(|x| x == v) {
                vars.push(v.to_string());
            }
        }
        vars
    }

    /// Result header: the projected variables, or every pattern variable
    /// for `SELECT *`.
    pub fn header(&self) -> Vec<String> {
        match &self.projection {
            Projection::All => self.pattern_vars(),
            Projection::Vars(vars) => vars.clone(),
        }
    }

    /// Checks that every projected, filtered and ordered variable is bound
    /// by some pattern.
    pub fn check_bound(&self) -> Result<(), QueryError> {
        let bound = self.pattern_vars();
        let projected = match &self.projection {
            Projection::All => &[][..],
            Projection::Vars(v) => &v[..],
        };
        let used = projected
            .iter()
            .map(String::as_str)
            .chain(self.filters.iter().flat_map(Filter::vars))
            .chain(self.order_by.iter().map(|o| o.var.as_str()));
        for v in used {
            if !bound.iter().any(|b| b == v) {
                return Err(QueryError::UnboundVariable(v.to_string()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultTable {
    pub header: Vec<String>,
    /// One term per header variable.
    pub rows: Vec<Vec<Term>>,
}

impl ResultTable {
    /// Drops repeated rows, keeping first occurrences.
    pub fn distinct(mut self) -> Self {
        let mut seen = std::collections::HashSet::new();
        self.rows.retain(|r| seen.insert(r.clone()));
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, var: &str) -> Option<Vec<&Term>> {
        let i = self.header.iter().position(|h| h == var)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// CSV with a header row; IRIs and literals are written as their plain
    /// string values.
    pub fn to_csv(&self) -> String {
        let mut writer = ::csv::Writer::from_writer(Vec::new());
        let plain = |t: &Term| match t {
            Term::Iri(i) => i.to_string(),
            Term::Literal(l) => l.lexical().to_string(),
        };
        // Writing into a Vec cannot fail.
        writer.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            writer
                .write_record(row.iter().map(plain))
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("UTF-8 input")
    }

    pub fn to_json_value(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (var, term) in self.header.iter().zip(row) {
                    obj.insert(var.clone(), term_json(term));
                }
                Value::Object(obj)
            })
            .collect();
        json!({ "vars": self.header, "rows": rows })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("JSON values serialize")
    }

    /// Tab-separated rendering for terminals.
    pub fn to_text(&self) -> String {
        let mut out = self
            .header
            .iter()
            .map(|h| format!("?{h}"))
            .collect::<Vec<_>>()
            .join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(nt).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }
}

fn nt(term: &Term) -> String {
    let mut out = String::new();
    crate::rdf::write_term(&mut out, term);
    out
}

fn term_json(term: &Term) -> Value {
    match term {
        Term::Iri(iri) => json!({ "type": "iri", "value": iri.as_str() }),
        Term::Literal(lit) => {
            let mut obj = Map::new();
            obj.insert("type".into(), "literal".into());
            obj.insert("value".into(), lit.lexical().into());
            obj.insert("datatype".into(), lit.datatype().iri().into());
            if let Some(lang) = lit.lang() {
                obj.insert("lang".into(), lang.into());
            }
            Value::Object(obj)
        }
    }
}

/// Parses and runs a query in one step.
pub fn run_query(store: &crate::graph::Store, text: &str) -> Result<ResultTable, QueryError> {
    execute(store, &parse_query(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Iri, Literal};

    fn dec(s: &str) -> Term {
        Literal::decimal(s).unwrap().into()
    }

    #[test]
    fn numeric_comparison_is_by_value() {
        assert!(compare_terms(&dec("70"), CompareOp::Eq, &dec("70.0")).unwrap());
        assert!(compare_terms(&dec("9.5"), CompareOp::Lt, &Literal::integer(10).into()).unwrap());
        assert!(!compare_terms(&dec("9.5"), CompareOp::Ge, &dec("10")).unwrap());
    }

    #[test]
    fn ordering_literal_against_iri_is_an_error() {
        let iri: Term = Iri::parse("http://x/a").unwrap().into();
        assert!(matches!(
            compare_terms(&dec("1"), CompareOp::Lt, &iri),
            Err(QueryError::TypeMismatch { .. })
        ));
        assert!(!compare_terms(&dec("1"), CompareOp::Eq, &iri).unwrap());
        assert!(compare_terms(&dec("1"), CompareOp::Ne, &iri).unwrap());
    }

    #[test]
    fn strings_compare_bytewise() {
        let a: Term = Literal::string("B").into();
        let b: Term = Literal::string("a").into();
        assert!(compare_terms(&a, CompareOp::Lt, &b).unwrap());
    }

    #[test]
    fn csv_and_json_forms() {
        let table = ResultTable {
            header: vec!["s".into(), "v".into()],
            rows: vec![vec![
                Iri::parse("http://x/a").unwrap().into(),
                Literal::string("x, \"y\"").into(),
            ]],
        };
        assert_eq!(table.to_csv(), "s,v\nhttp://x/a,\"x, \"\"y\"\"\"\n");
        let v = table.to_json_value();
        assert_eq!(v["vars"], json!(["s", "v"]));
        assert_eq!(v["rows"][0]["s"]["type"], "iri");
        assert_eq!(
            v["rows"][0]["v"]["datatype"],
            "http://www.w3.org/2001/XMLSchema#string"
        );
    }
}
