//! RDF serialization: canonical N-Triples (read and write), Turtle
//! (write only) and store snapshots.

mod ntriples;
mod snapshot;
mod turtle;

use std::fmt;

use thiserror::Error;

use crate::graph::{EntityKind, Store, OWL_SAME_AS, RDFS_LABEL, RDF_TYPE, XSD};

pub use ntriples::{escape_literal, parse_ntriples, triple_line, write_ntriples, write_term};
pub use snapshot::{
    load_snapshot, read_snapshot, save_snapshot, write_snapshot, SnapshotError, SnapshotPaths,
};
pub use turtle::write_turtle;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    NTriples,
    Turtle,
}

impl Format {
    pub fn media_type(self) -> &'static str {
        match self {
            Format::NTriples => "application/n-triples",
            Format::Turtle => "text/turtle",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::NTriples => "ntriples",
            Format::Turtle => "turtle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid prefix name {0:?}")]
pub struct InvalidPrefix(pub String);

/// `PN_PREFIX`, restricted to ASCII name characters. The empty prefix is
/// allowed.
pub fn is_prefix_name(name: &str) -> bool {
    if name.is_empty() {
        return true;
    }
    let mut chars = name.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
    first_ok
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !name.ends_with('.')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerializationOptions {
    pub format: Format,
    prefixes: Vec<(String, String)>,
    pub sort: bool,
}

impl Default for SerializationOptions {
    fn default() -> Self {
        SerializationOptions {
            format: Format::NTriples,
            prefixes: Vec::new(),
            sort: true,
        }
    }
}

impl SerializationOptions {
    pub fn ntriples() -> Self {
        Self::default()
    }

    /// Turtle with the standard prefixes plus one per entity kind of the
    /// store's namespace.
    pub fn turtle_for(store: &Store) -> Self {
        let mut opts = SerializationOptions {
            format: Format::Turtle,
            ..Self::default()
        };
        let rdf_ns = RDF_TYPE.trim_end_matches("type");
        let rdfs_ns = RDFS_LABEL.trim_end_matches("label");
        let owl_ns = OWL_SAME_AS.trim_end_matches("sameAs");
        for (name, ns) in [
            ("owl", owl_ns),
            ("rdf", rdf_ns),
            ("rdfs", rdfs_ns),
            ("xsd", XSD),
        ] {
            opts.prefixes.push((name.to_string(), ns.to_string()));
        }
        for (name, kind) in [
            ("class", EntityKind::Class),
            ("property", EntityKind::Property),
            ("resource", EntityKind::Resource),
            ("template", EntityKind::Template),
        ] {
            let ns = format!("{}/{}/", store.namespace(), kind.segment());
            opts.prefixes.push((name.to_string(), ns));
        }
        opts.prefixes.sort();
        opts
    }

    pub fn with_prefix(mut self, name: &str, namespace: &str) -> Result<Self, InvalidPrefix> {
        if !is_prefix_name(name) {
            return Err(InvalidPrefix(name.to_string()));
        }
        self.prefixes.retain(|(n, _)| n != name);
        self.prefixes
            .push((name.to_string(), namespace.to_string()));
        self.prefixes.sort();
        Ok(self)
    }

    pub fn prefixes(&self) -> &[(String, String)] {
        &self.prefixes
    }
}

/// Serializes the store's RDF view (statements plus entity labels).
pub fn serialize(store: &Store, opts: &SerializationOptions) -> String {
    let triples = store.rdf_triples();
    match opts.format {
        Format::NTriples => write_ntriples(&triples, opts.sort),
        Format::Turtle => write_turtle(&triples, &opts.prefixes, opts.sort),
    }
}
