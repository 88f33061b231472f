use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::term::{Iri, Literal, Term, OWL_SAME_AS, RDFS_LABEL, RDF_TYPE};

/// Default minting namespace.
pub const DEFAULT_NAMESPACE: &str = "http://localhost:8080";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("id {0} is already minted")]
    DuplicateId(String),
    #[error("invalid label {0:?}: labels must be non-empty and free of control characters")]
    InvalidLabel(String),
    #[error("invalid id {id:?} for kind {kind}")]
    InvalidId { id: String, kind: EntityKind },
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error("predicate {0} is not registered as a property")]
    PredicateNotProperty(Iri),
    #[error("predicate {0} is reserved for registry labels")]
    ReservedPredicate(Iri),
    #[error("entity {0} not found")]
    NotFound(String),
    #[error("invalid IRI {0:?}")]
    InvalidIri(String),
    #[error("invalid namespace {0:?}: expected an absolute http(s) IRI")]
    InvalidNamespace(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    Resource,
    Property,
    Class,
    Template,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [
        EntityKind::Resource,
        EntityKind::Property,
        EntityKind::Class,
        EntityKind::Template,
    ];

    pub fn prefix(self) -> char {
        match self {
            EntityKind::Resource => 'R',
            EntityKind::Property => 'P',
            EntityKind::Class => 'C',
            EntityKind::Template => 'T',
        }
    }

    /// Path segment used in minted IRIs and HTTP routes.
    pub fn segment(self) -> &'static str {
        match self {
            EntityKind::Resource => "resource",
            EntityKind::Property => "property",
            EntityKind::Class => "class",
            EntityKind::Template => "template",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Resource => "Resource",
            EntityKind::Property => "Property",
            EntityKind::Class => "Class",
            EntityKind::Template => "Template",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn from_prefix(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.prefix() == c)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Splits a local id such as `R12` into its kind and counter value.
pub fn parse_local_id(id: &str) -> Option<(EntityKind, u64)> {
    let mut chars = id.chars();
    let kind = EntityKind::from_prefix(chars.next()?)?;
    let digits = chars.as_str();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((kind, digits.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Entity {
    pub iri: Iri,
    pub local_id: String,
    pub kind: EntityKind,
    pub label: String,
    /// Registered foreign IRI (same-as targets, standard vocabularies).
    pub external: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject,
            predicate,
            object: object.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Statement {
    pub id: u64,
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Statement {
    pub fn triple(&self) -> Triple {
        Triple::new(
            self.subject.clone(),
            self.predicate.clone(),
            self.object.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityDescription {
    pub iri: Iri,
    pub local_id: String,
    pub kind: EntityKind,
    pub label: String,
    pub classes: Vec<Iri>,
    pub statements: Vec<Statement>,
}

/// Store handle shared between threads: many readers or one writer.
pub type SharedStore = Arc<RwLock<Store>>;

/// In-memory triple store with an entity registry.
///
/// Statements are indexed three ways (by subject, by predicate, by object);
/// every index maps a term to the ordered set of statement ordinals.
#[derive(Debug, Clone)]
pub struct Store {
    namespace: String,
    entities: IndexMap<Iri, Entity>,
    by_local_id: HashMap<String, Iri>,
    counters: [u64; 4],
    next_ordinal: u64,
    statements: BTreeMap<u64, Triple>,
    ordinals: HashMap<Triple, u64>,
    by_subject: HashMap<Iri, BTreeSet<u64>>,
    by_predicate: HashMap<Iri, BTreeSet<u64>>,
    by_object: HashMap<Term, BTreeSet<u64>>,
    label_predicate: Iri,
    type_predicate: Iri,
    same_as_predicate: Iri,
}

impl Store {
    pub fn new(namespace: &str) -> Result<Self, GraphError> {
        let namespace = namespace.trim_end_matches('/');
        let valid = (namespace.starts_with("http://") || namespace.starts_with("https://"))
            && namespace.len() > "https://".len()
            && Iri::parse(namespace).is_ok();
        if !valid {
            return Err(GraphError::InvalidNamespace(namespace.to_string()));
        }
        let iri = |s: &str| Iri::parse(s).expect("static IRI");
        let mut store = Store {
            namespace: namespace.to_string(),
            entities: IndexMap::new(),
            by_local_id: HashMap::new(),
            counters: [0; 4],
            next_ordinal: 1,
            statements: BTreeMap::new(),
            ordinals: HashMap::new(),
            by_subject: HashMap::new(),
            by_predicate: HashMap::new(),
            by_object: HashMap::new(),
            label_predicate: iri(RDFS_LABEL),
            type_predicate: iri(RDF_TYPE),
            same_as_predicate: iri(OWL_SAME_AS),
        };
        for p in [RDFS_LABEL, RDF_TYPE, OWL_SAME_AS] {
            store.register_external(&iri(p), EntityKind::Property)?;
        }
        Ok(store)
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn label_predicate(&self) -> &Iri {
        &self.label_predicate
    }

    pub fn type_predicate(&self) -> &Iri {
        &self.type_predicate
    }

    pub fn same_as_predicate(&self) -> &Iri {
        &self.same_as_predicate
    }

    pub fn iri_for(&self, kind: EntityKind, local_id: &str) -> Result<Iri, GraphError> {
        let full = format!("{}/{}/{}", self.namespace, kind.segment(), local_id);
        Iri::parse(&full).map_err(|_| GraphError::InvalidIri(full))
    }

    pub fn mint_entity(
        &mut self,
        kind: EntityKind,
        label: &str,
        explicit_id: Option<&str>,
    ) -> Result<Iri, GraphError> {
        if label.trim().is_empty() || label.chars().any(char::is_control) {
            return Err(GraphError::InvalidLabel(label.to_string()));
        }
        let local_id = match explicit_id {
            Some(id) => {
                let invalid = || GraphError::InvalidId {
                    id: id.to_string(),
                    kind,
                };
                let (id_kind, n) = parse_local_id(id).ok_or_else(invalid)?;
                if id_kind != kind || n == 0 {
                    return Err(invalid());
                }
                if self.by_local_id.contains_key(id) {
                    return Err(GraphError::DuplicateId(id.to_string()));
                }
                let counter = &mut self.counters[kind.index()];
                *counter = (*counter).max(n);
                id.to_string()
            }
            None => loop {
                let counter = &mut self.counters[kind.index()];
                *counter += 1;
                let candidate = format!("{}{}", kind.prefix(), counter);
                if !self.by_local_id.contains_key(&candidate) {
                    break candidate;
                }
            },
        };
        let iri = self.iri_for(kind, &local_id)?;
        self.insert_entity(Entity {
            iri: iri.clone(),
            local_id,
            kind,
            label: label.to_string(),
            external: false,
        });
        Ok(iri)
    }

    /// Registers a foreign IRI so it may be used as a subject, predicate or
    /// link target. Registering the same IRI twice is a no-op.
    pub fn register_external(&mut self, iri: &Iri, kind: EntityKind) -> Result<(), GraphError> {
        if let Some(existing) = self.entities.get(iri) {
            return if existing.external {
                Ok(())
            } else {
                Err(GraphError::DuplicateId(existing.local_id.clone()))
            };
        }
        if self.in_namespace(iri) {
            return Err(GraphError::InvalidIri(iri.to_string()));
        }
        self.insert_entity(Entity {
            iri: iri.clone(),
            local_id: iri.to_string(),
            kind,
            label: iri.to_string(),
            external: true,
        });
        Ok(())
    }

    fn insert_entity(&mut self, entity: Entity) {
        if !entity.external {
            self.by_local_id
                .insert(entity.local_id.clone(), entity.iri.clone());
        }
        self.entities.insert(entity.iri.clone(), entity);
    }

    /// Restores a local entity with a known id; used by snapshot loading.
    pub(crate) fn restore_entity(
        &mut self,
        local_id: &str,
        kind: EntityKind,
        label: &str,
    ) -> Result<Iri, GraphError> {
        self.mint_entity(kind, label, Some(local_id))
    }

    pub(crate) fn counters(&self) -> [u64; 4] {
        self.counters
    }

    pub(crate) fn raise_counters(&mut self, counters: [u64; 4]) {
        for (c, v) in self.counters.iter_mut().zip(counters) {
            *c = (*c).max(v);
        }
    }

    fn in_namespace(&self, iri: &Iri) -> bool {
        iri.as_str()
            .strip_prefix(self.namespace.as_str())
            .is_some_and(|rest| rest.starts_with('/'))
    }

    pub fn is_local(&self, iri: &Iri) -> bool {
        self.entities.get(iri).is_some_and(|e| !e.external)
    }

    pub fn entity(&self, iri: &Iri) -> Option<&Entity> {
        self.entities.get(iri)
    }

    pub fn entity_by_local_id(&self, local_id: &str) -> Option<&Entity> {
        self.by_local_id
            .get(local_id)
            .and_then(|i| self.entities.get(i))
    }

    /// Registered entities in registration order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn minted_entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values().filter(|e| !e.external)
    }

    pub fn label(&self, iri: &Iri) -> Option<&str> {
        self.entities.get(iri).map(|e| e.label.as_str())
    }

    pub fn find_entities<'a>(
        &'a self,
        kind: EntityKind,
        label: &'a str,
    ) -> impl Iterator<Item = &'a Entity> + 'a {
        self.entities
            .values()
            .filter(move |e| !e.external && e.kind == kind && e.label == label)
    }

    pub fn add_statement(
        &mut self,
        subject: &Iri,
        predicate: &Iri,
        object: impl Into<Term>,
    ) -> Result<u64, GraphError> {
        let object = object.into();
        if !self.entities.contains_key(subject) {
            return Err(GraphError::UnknownEntity(subject.to_string()));
        }
        match self.entities.get(predicate) {
            None => return Err(GraphError::UnknownEntity(predicate.to_string())),
            Some(e) if e.kind != EntityKind::Property => {
                return Err(GraphError::PredicateNotProperty(predicate.clone()))
            }
            Some(_) => {}
        }
        if *predicate == self.label_predicate {
            return Err(GraphError::ReservedPredicate(predicate.clone()));
        }
        if let Term::Iri(o) = &object {
            if self.in_namespace(o) && !self.entities.contains_key(o) {
                return Err(GraphError::UnknownEntity(o.to_string()));
            }
        }
        let triple = Triple::new(subject.clone(), predicate.clone(), object);
        if let Some(&id) = self.ordinals.get(&triple) {
            return Ok(id);
        }
        let id = self.next_ordinal;
        self.next_ordinal += 1;
        self.by_subject
            .entry(triple.subject.clone())
            .or_default()
            .insert(id);
        self.by_predicate
            .entry(triple.predicate.clone())
            .or_default()
            .insert(id);
        self.by_object
            .entry(triple.object.clone())
            .or_default()
            .insert(id);
        self.ordinals.insert(triple.clone(), id);
        self.statements.insert(id, triple);
        Ok(id)
    }

    /// Removes a triple; returns whether it was present.
    pub fn remove_statement(&mut self, subject: &Iri, predicate: &Iri, object: &Term) -> bool {
        let key = Triple::new(subject.clone(), predicate.clone(), object.clone());
        let Some(id) = self.ordinals.remove(&key) else {
            return false;
        };
        self.statements.remove(&id);
        fn unindex<K: std::hash::Hash + Eq>(map: &mut HashMap<K, BTreeSet<u64>>, k: &K, id: u64) {
            if let Some(set) = map.get_mut(k) {
                set.remove(&id);
                if set.is_empty() {
                    map.remove(k);
                }
            }
        }
        unindex(&mut self.by_subject, &key.subject, id);
        unindex(&mut self.by_predicate, &key.predicate, id);
        unindex(&mut self.by_object, &key.object, id);
        true
    }

    pub fn contains(&self, subject: &Iri, predicate: &Iri, object: &Term) -> bool {
        self.ordinals.contains_key(&Triple::new(
            subject.clone(),
            predicate.clone(),
            object.clone(),
        ))
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    fn statement_at(&self, id: u64) -> Statement {
        let t = &self.statements[&id];
        Statement {
            id,
            subject: t.subject.clone(),
            predicate: t.predicate.clone(),
            object: t.object.clone(),
        }
    }

    /// Smallest index posting list for the bound slots, or `None` when no
    /// slot is bound.
    fn candidates(
        &self,
        s: Option<&Iri>,
        p: Option<&Iri>,
        o: Option<&Term>,
    ) -> Option<Option<&BTreeSet<u64>>> {
        let mut lists = Vec::with_capacity(3);
        if let Some(s) = s {
            lists.push(self.by_subject.get(s));
        }
        if let Some(p) = p {
            lists.push(self.by_predicate.get(p));
        }
        if let Some(o) = o {
            lists.push(self.by_object.get(o));
        }
        if lists.is_empty() {
            return None;
        }
        Some(
            lists
                .into_iter()
                .min_by_key(|l| l.map_or(0, |set| set.len()))
                .flatten(),
        )
    }

    /// Statements agreeing with every bound slot, ordered by ordinal.
    pub fn statements_matching(
        &self,
        s: Option<&Iri>,
        p: Option<&Iri>,
        o: Option<&Term>,
    ) -> Vec<Statement> {
        let agrees = |t: &Triple| {
            s.is_none_or(|s| *s == t.subject)
                && p.is_none_or(|p| *p == t.predicate)
                && o.is_none_or(|o| *o == t.object)
        };
        match self.candidates(s, p, o) {
            None => self
                .statements
                .keys()
                .map(|&id| self.statement_at(id))
                .collect(),
            Some(None) => Vec::new(),
            Some(Some(ids)) => ids
                .iter()
                .filter(|id| agrees(&self.statements[id]))
                .map(|&id| self.statement_at(id))
                .collect(),
        }
    }

    /// Upper bound on the number of statements matching a pattern, taken
    /// from the smallest posting list. Used by the query planner.
    pub fn match_estimate(&self, s: Option<&Iri>, p: Option<&Iri>, o: Option<&Term>) -> usize {
        match self.candidates(s, p, o) {
            None => self.statements.len(),
            Some(list) => list.map_or(0, BTreeSet::len),
        }
    }

    /// Objects of `(subject, predicate, ?)` in ordinal order.
    pub fn objects(&self, subject: &Iri, predicate: &Iri) -> Vec<Term> {
        self.statements_matching(Some(subject), Some(predicate), None)
            .into_iter()
            .map(|st| st.object)
            .collect()
    }

    pub fn has_type(&self, entity: &Iri, class: &Iri) -> bool {
        self.contains(entity, &self.type_predicate, &Term::Iri(class.clone()))
    }

    /// Instances of a class in registration order.
    pub fn instances_of(&self, class: &Iri) -> Vec<Iri> {
        let typed: HashSet<Iri> = self
            .statements_matching(
                None,
                Some(&self.type_predicate),
                Some(&Term::Iri(class.clone())),
            )
            .into_iter()
            .map(|st| st.subject)
            .collect();
        self.entities
            .keys()
            .filter(|iri| typed.contains(*iri))
            .cloned()
            .collect()
    }

    pub fn resolve(&self, iri: &Iri) -> Result<EntityDescription, GraphError> {
        let entity = self
            .entities
            .get(iri)
            .ok_or_else(|| GraphError::NotFound(iri.to_string()))?;
        let statements = self.statements_matching(Some(iri), None, None);
        let classes = statements
            .iter()
            .filter(|st| st.predicate == self.type_predicate)
            .filter_map(|st| st.object.as_iri().cloned())
            .collect();
        Ok(EntityDescription {
            iri: iri.clone(),
            local_id: entity.local_id.clone(),
            kind: entity.kind,
            label: entity.label.clone(),
            classes,
            statements,
        })
    }

    /// The RDF view of the store: every statement plus one label triple
    /// per locally minted entity.
    pub fn rdf_triples(&self) -> Vec<Triple> {
        let mut out: Vec<Triple> = self.statements.values().cloned().collect();
        out.extend(self.minted_entities().map(|e| {
            Triple::new(
                e.iri.clone(),
                self.label_predicate.clone(),
                Literal::string(e.label.clone()),
            )
        }));
        out
    }

    pub fn triple_set(&self) -> HashSet<Triple> {
        self.ordinals.keys().cloned().collect()
    }

    pub fn into_shared(self) -> SharedStore {
        Arc::new(RwLock::new(self))
    }
}

/// Content equality: namespace, registry (in order), counters and the
/// triple set. Statement ordinals are not compared.
impl PartialEq for Store {
    fn eq(&self, other: &Self) -> bool {
        self.namespace == other.namespace
            && self.counters == other.counters
            && self.entities.len() == other.entities.len()
            && self
                .entities
                .values()
                .zip(other.entities.values())
                .all(|(a, b)| a == b)
            && self.ordinals.len() == other.ordinals.len()
            && self.ordinals.keys().all(|t| other.ordinals.contains_key(t))
    }
}
