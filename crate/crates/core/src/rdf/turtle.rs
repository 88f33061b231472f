//! Emit-only Turtle writer: prefixes first, then one block per subject with
//! `;`-separated predicate lists.

use std::collections::BTreeMap;

use crate::graph::{Iri, Term, Triple};

use super::ntriples::{escape_literal, write_literal_suffix};

fn is_local_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

struct Compactor<'a> {
    prefixes: &'a [(String, String)],
}

impl Compactor<'_> {
    fn iri(&self, out: &mut String, iri: &str) {
        let best = self
            .prefixes
            .iter()
            .filter(|(_, ns)| iri.starts_with(ns.as_str()) && is_local_name(&iri[ns.len()..]))
            .max_by_key(|(_, ns)| ns.len());
        match best {
            Some((name, ns)) => {
                out.push_str(name);
                out.push(':');
                out.push_str(&iri[ns.len()..]);
            }
            None => {
                out.push('<');
                out.push_str(iri);
                out.push('>');
            }
        }
    }

    fn term(&self, out: &mut String, term: &Term) {
        match term {
            Term::Iri(iri) => self.iri(out, iri.as_str()),
            Term::Literal(lit) => {
                out.push('"');
                escape_literal(out, lit.lexical());
                out.push('"');
                if lit.lang().is_none() && lit.datatype() != crate::graph::Datatype::String {
                    out.push_str("^^");
                    self.iri(out, lit.datatype().iri());
                } else {
                    write_literal_suffix(out, lit);
                }
            }
        }
    }
}

pub fn write_turtle(triples: &[Triple], prefixes: &[(String, String)], sort: bool) -> String {
    let mut out = String::new();
    for (name, ns) in prefixes {
        out.push_str("@prefix ");
        out.push_str(name);
        out.push_str(": <");
        out.push_str(ns);
        out.push_str("> .\n");
    }
    if triples.is_empty() {
        return out;
    }
    if !prefixes.is_empty() {
        out.push('\n');
    }
    let compactor = Compactor { prefixes };

    // Group by subject, keeping first-appearance order unless sorting.
    let mut order: Vec<&Iri> = Vec::new();
    let mut groups: BTreeMap<&Iri, Vec<(&Iri, &Term)>> = BTreeMap::new();
    for t in triples {
        let entry = groups.entry(&t.subject).or_default();
        if entry.is_empty() {
            order.push(&t.subject);
        }
        entry.push((&t.predicate, &t.object));
    }
    if sort {
        order.sort_by(|a, b| a.as_str().as_bytes().cmp(b.as_str().as_bytes()));
    }
    for (i, subject) in order.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let mut pairs = groups.remove(subject).unwrap_or_default();
        if sort {
            pairs.sort();
        }
        compactor.iri(&mut out, subject.as_str());
        let mut last_pred: Option<&Iri> = None;
        for (pred, obj) in pairs {
            if last_pred == Some(pred) {
                out.push_str(", ");
            } else {
                out.push_str(if last_pred.is_some() { " ;\n    " } else { " " });
                compactor.iri(&mut out, pred.as_str());
                out.push(' ');
                last_pred = Some(pred);
            }
            compactor.term(&mut out, obj);
        }
        out.push_str(" .\n");
    }
    out
}
