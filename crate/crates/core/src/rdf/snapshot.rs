//! Snapshot file pair: `<name>.nt` holds the sorted N-Triples dump and
//! `<name>.reg` the entity registry, one `local_id \t kind \t label` line per
//! entity in registration order. Registry header lines start with `#`.
//! External IRIs are stored percent-encoded in the id column.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use percent_encoding::{percent_decode_str, utf8_percent_encode, NON_ALPHANUMERIC};
use thiserror::Error;

use crate::graph::{parse_local_id, EntityKind, GraphError, Iri, Store, Term, DEFAULT_NAMESPACE};

use super::{parse_ntriples, serialize, ParseError, SerializationOptions};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("N-Triples {0}")]
    Parse(#[from] ParseError),
    #[error("registry line {line}: {reason}")]
    Registry { line: usize, reason: String },
    #[error("statement references unregistered entity {0}")]
    DanglingReference(String),
    #[error("label triple for {iri} disagrees with the registry label {expected:?}")]
    LabelMismatch { iri: String, expected: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(format!(
                    "invalid escape \\{}",
                    other.map(String::from).unwrap_or_default()
                ))
            }
        }
    }
    Ok(out)
}

/// Serializes a store into the `(nt, reg)` text pair.
pub fn save_snapshot(store: &Store) -> (String, String) {
    let nt = serialize(store, &SerializationOptions::ntriples());
    let mut reg = String::new();
    let _ = writeln!(reg, "# namespace\t{}", store.namespace());
    let counters = store.counters();
    let _ = write!(reg, "# counters");
    for (kind, value) in EntityKind::ALL.iter().zip(counters) {
        let _ = write!(reg, "\t{}={value}", kind.prefix());
    }
    reg.push('\n');
    for e in store.entities() {
        let id = if e.external {
            utf8_percent_encode(e.iri.as_str(), NON_ALPHANUMERIC).to_string()
        } else {
            e.local_id.clone()
        };
        let _ = writeln!(reg, "{}\t{}\t{}", id, e.kind, escape(&e.label));
    }
    (nt, reg)
}

fn parse_header(line: &str, namespace: &mut Option<String>, counters: &mut [u64; 4]) {
    let mut fields = line.trim_start_matches('#').trim_start().split('\t');
    match fields.next() {
        Some("namespace") => *namespace = fields.next().map(str::to_string),
        Some("counters") => {
            for field in fields {
                let parsed = field.split_once('=').and_then(|(k, v)| {
                    let kind = EntityKind::from_prefix(k.chars().next()?)?;
                    Some((kind, v.parse::<u64>().ok()?))
                });
                if let Some((kind, v)) = parsed {
                    counters[kind as usize] = v;
                }
            }
        }
        _ => {}
    }
}

/// Rebuilds a store from its snapshot pair. Label triples of locally
/// minted entities are checked against the registry and not re-added as
/// statements.
pub fn load_snapshot(nt_text: &str, registry_text: &str) -> Result<Store, SnapshotError> {
    let mut namespace = None;
    let mut counters = [0u64; 4];
    let mut rows = Vec::new();
    for (i, line) in registry_text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with('#') {
            parse_header(line, &mut namespace, &mut counters);
            continue;
        }
        let bad = |reason: String| SnapshotError::Registry {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, kind, label] = fields[..] else {
            return Err(bad(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        };
        let kind =
            EntityKind::from_name(kind).ok_or_else(|| bad(format!("unknown kind {kind:?}")))?;
        let label = unescape(label).map_err(bad)?;
        rows.push((line_no, id.to_string(), kind, label));
    }

    let mut store = Store::new(namespace.as_deref().unwrap_or(DEFAULT_NAMESPACE))?;
    for (line, id, kind, label) in rows {
        let bad = |reason: String| SnapshotError::Registry { line, reason };
        if parse_local_id(&id).is_some() {
            store
                .restore_entity(&id, kind, &label)
                .map_err(|e| bad(e.to_string()))?;
        } else {
            let decoded = percent_decode_str(&id)
                .decode_utf8()
                .map_err(|e| bad(e.to_string()))?;
            let iri = Iri::parse(decoded.as_ref()).map_err(|e| bad(e.to_string()))?;
            store
                .register_external(&iri, kind)
                .map_err(|e| bad(e.to_string()))?;
        }
    }
    store.raise_counters(counters);

    let label_pred = store.label_predicate().clone();
    for triple in parse_ntriples(nt_text)? {
        if triple.predicate == label_pred {
            if let Some(entity) = store.entity(&triple.subject).filter(|e| !e.external) {
                let matches = matches!(&triple.object, Term::Literal(l)
                    if l.lang().is_none() && l.lexical() == entity.label);
                if matches {
                    continue;
                }
                return Err(SnapshotError::LabelMismatch {
                    iri: triple.subject.to_string(),
                    expected: entity.label.clone(),
                });
            }
        }
        for iri in [&triple.subject, &triple.predicate] {
            if store.entity(iri).is_none() {
                return Err(SnapshotError::DanglingReference(iri.to_string()));
            }
        }
        match store.add_statement(&triple.subject, &triple.predicate, triple.object.clone()) {
            Ok(_) => {}
            Err(GraphError::UnknownEntity(iri)) => {
                return Err(SnapshotError::DanglingReference(iri))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(store)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotPaths {
    pub triples: PathBuf,
    pub registry: PathBuf,
}

impl SnapshotPaths {
    /// `<base>.nt` and `<base>.reg`.
    pub fn new(base: impl AsRef<Path>) -> Self {
        let base = base.as_ref().as_os_str().to_owned();
        let with = |ext: &str| {
            let mut p = base.clone();
            p.push(ext);
            PathBuf::from(p)
        };
        SnapshotPaths {
            triples: with(".nt"),
            registry: with(".reg"),
        }
    }

    pub fn exists(&self) -> bool {
        self.triples.exists() && self.registry.exists()
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_snapshot(store: &Store, paths: &SnapshotPaths) -> Result<(), SnapshotError> {
    let (nt, reg) = save_snapshot(store);
    if let Some(dir) = paths.triples.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(&paths.triples, nt).map_err(io_err(&paths.triples))?;
    std::fs::write(&paths.registry, reg).map_err(io_err(&paths.registry))?;
    Ok(())
}

pub fn read_snapshot(paths: &SnapshotPaths) -> Result<Store, SnapshotError> {
    let nt = std::fs::read_to_string(&paths.triples).map_err(io_err(&paths.triples))?;
    let reg = std::fs::read_to_string(&paths.registry).map_err(io_err(&paths.registry))?;
    load_snapshot(&nt, &reg)
}
