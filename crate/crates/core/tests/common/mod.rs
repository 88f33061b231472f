//! Shared fixtures and generators for the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use nibs_kg::graph::{Datatype, EntityKind, Iri, Literal, Store, Term, DEFAULT_NAMESPACE};
use nibs_kg::ingest::{generate_synthetic_corpus, ingest_corpus, IngestSummary};
use nibs_kg::query::{
    CompareOp, Direction, Filter, OrderBy, PatternTerm, Projection, SelectQuery, TriplePattern,
};
use nibs_kg::rdf::write_term;
use nibs_kg::template::{define_rtms_template, Template};
use nibs_kg::vocabulary::{seed_rtms_vocabulary, VocabularyManifest};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Seeded {
    pub store: Store,
    pub manifest: VocabularyManifest,
    pub template: Template,
}

pub fn seeded() -> Seeded {
    let mut store = Store::new(DEFAULT_NAMESPACE).unwrap();
    let manifest = seed_rtms_vocabulary(&mut store).unwrap();
    let template = define_rtms_template(&mut store, &manifest).unwrap();
    Seeded {
        store,
        manifest,
        template,
    }
}

/// Seeded store with `n` synthetic records ingested.
pub fn ingested(seed: u64, n: usize) -> (Seeded, IngestSummary) {
    let mut s = seeded();
    let records = generate_synthetic_corpus(seed, n);
    let summary = ingest_corpus(&mut s.store, &s.manifest, &s.template, &records).unwrap();
    (s, summary)
}

impl Seeded {
    pub fn prop(&self, label: &str) -> Iri {
        self.manifest.property_by_label(label).unwrap().iri.clone()
    }

    pub fn term(&self, property: &str, label: &str) -> Iri {
        self.manifest
            .term(&self.prop(property), label)
            .unwrap()
            .iri
            .clone()
    }
}

// ---------------------------------------------------------------------------
// Adversarial text

const TRICKY: &[char] = &[
    '"', '\\', '\'', '<', '>', '{', '}', '^', '@', '#', '.', ';', ',', ' ', 'é', 'ß', 'Ω', '日',
    '本', '😀', '\u{200b}', 'a', 'b', 'z', '0', '9', '_', '-',
];
const CONTROL: &[char] = &[
    '\n', '\r', '\t', '\u{0}', '\u{1}', '\u{8}', '\u{c}', '\u{1f}', '\u{7f}',
];

/// Non-empty text free of control characters, heavy on characters that
/// need escaping.
pub fn tricky_label(rng: &mut impl Rng) -> String {
    loop {
        let len = rng.random_range(1..12);
        let s: String = (0..len).map(|_| *TRICKY.choose(rng).unwrap()).collect();
        if !s.trim().is_empty() {
            return s;
        }
    }
}

/// Arbitrary text including control characters and newlines.
pub fn tricky_text(rng: &mut impl Rng) -> String {
    let len = rng.random_range(0..16);
    (0..len)
        .map(|_| {
            if rng.random_bool(0.25) {
                *CONTROL.choose(rng).unwrap()
            } else {
                *TRICKY.choose(rng).unwrap()
            }
        })
        .collect()
}

pub fn random_literal(rng: &mut impl Rng) -> Literal {
    match rng.random_range(0..6) {
        0 => Literal::string(tricky_text(rng)),
        1 => {
            let tag = *["en", "de", "en-GB", "zh-Hant-TW", "x-private1"]
                .choose(rng)
                .unwrap();
            Literal::new(tricky_text(rng), Datatype::String, Some(tag.to_string())).unwrap()
        }
        2 => Literal::integer(rng.random_range(-1_000_000..1_000_000)),
        3 => {
            let int = rng.random_range(-500..500);
            let frac = rng.random_range(0..1000);
            Literal::decimal(format!("{int}.{frac:03}")).unwrap()
        }
        4 => Literal::boolean(rng.random_bool(0.5)),
        _ => Literal::new(
            format!("{}", rng.random_range(0..100)),
            Datatype::Integer,
            None,
        )
        .unwrap(),
    }
}

/// A random store with roughly `triples` statements, adversarial labels
/// and literals, and a sprinkling of external IRIs.
pub fn random_store(rng: &mut impl Rng, triples: usize) -> Store {
    let mut store = Store::new(DEFAULT_NAMESPACE).unwrap();
    let n_props = rng.random_range(1..=12);
    let n_res = (triples / 4).max(1);
    let props: Vec<Iri> = (0..n_props)
        .map(|_| {
            let label = tricky_label(rng);
            store
                .mint_entity(EntityKind::Property, &label, None)
                .unwrap()
        })
        .collect();
    let mut resources: Vec<Iri> = (0..n_res)
        .map(|_| {
            let label = tricky_label(rng);
            store
                .mint_entity(EntityKind::Resource, &label, None)
                .unwrap()
        })
        .collect();
    for _ in 0..rng.random_range(0..3) {
        let label = tricky_label(rng);
        resources.push(store.mint_entity(EntityKind::Class, &label, None).unwrap());
        let label = tricky_label(rng);
        store
            .mint_entity(EntityKind::Template, &label, None)
            .unwrap();
    }
    let externals: Vec<Iri> = (0..4)
        .map(|i| {
            Iri::parse(format!(
                "http://purl.obolibrary.org/obo/NCIT_C{i}%C3%A9?q=1#frag"
            ))
            .unwrap()
        })
        .collect();
    let ty = store.type_predicate().clone();
    let same_as = store.same_as_predicate().clone();
    let mut attempts = 0;
    while store.len() < triples && attempts < triples * 3 {
        attempts += 1;
        let s = resources.choose(rng).unwrap().clone();
        let p = match rng.random_range(0..20) {
            0 => ty.clone(),
            1 => same_as.clone(),
            _ => props.choose(rng).unwrap().clone(),
        };
        let o: Term = match rng.random_range(0..10) {
            0..=2 => resources.choose(rng).unwrap().clone().into(),
            3 => externals.choose(rng).unwrap().clone().into(),
            _ => random_literal(rng).into(),
        };
        store.add_statement(&s, &p, o).unwrap();
    }
    store
}

// ---------------------------------------------------------------------------
// Query workloads

/// A store tuned for joins: few predicates, a small literal pool and
/// resource-valued objects that are also subjects.
pub fn join_store(rng: &mut impl Rng, triples: usize) -> Store {
    let mut store = Store::new(DEFAULT_NAMESPACE).unwrap();
    let props: Vec<Iri> = (0..6)
        .map(|i| {
            store
                .mint_entity(EntityKind::Property, &format!("p{i}"), None)
                .unwrap()
        })
        .collect();
    let n_res = (triples / 8).max(2);
    let resources: Vec<Iri> = (0..n_res)
        .map(|i| {
            store
                .mint_entity(EntityKind::Resource, &format!("r{i}"), None)
                .unwrap()
        })
        .collect();
    let mut attempts = 0;
    while store.len() < triples && attempts < triples * 3 {
        attempts += 1;
        let s = resources.choose(rng).unwrap();
        let p = props.choose(rng).unwrap();
        let o: Term = if rng.random_bool(0.4) {
            resources.choose(rng).unwrap().clone().into()
        } else {
            pool_literal(rng).into()
        };
        store.add_statement(s, p, o).unwrap();
    }
    store
}

pub fn pool_literal(rng: &mut impl Rng) -> Literal {
    match rng.random_range(0..8) {
        0 | 1 => Literal::integer(rng.random_range(-5..15)),
        2 | 3 => {
            let lex = [
                "0.5", "1.0", "2.25", "-3.5", "7", "10.00", "+4.5", ".75", "3.",
            ];
            Literal::decimal(*lex.choose(rng).unwrap()).unwrap()
        }
        4 => Literal::boolean(rng.random_bool(0.5)),
        5 => Literal::new(
            *["chat", "Katze", "猫"].choose(rng).unwrap(),
            Datatype::String,
            Some((*["fr", "de", "ja"].choose(rng).unwrap()).to_string()),
        )
        .unwrap(),
        _ => Literal::string(
            *["a", "b", "F8", "say \"hi\"", "é", "10"]
                .choose(rng)
                .unwrap(),
        ),
    }
}

fn random_constant(rng: &mut impl Rng, store: &Store, slot: usize) -> Term {
    let all = store.statements_matching(None, None, None);
    let st = all.choose(rng).unwrap();
    slot_term(
        st.subject.clone(),
        st.predicate.clone(),
        st.object.clone(),
        slot,
    )
}

fn slot_term(s: Iri, p: Iri, o: Term, slot: usize) -> Term {
    match slot {
        0 => s.into(),
        1 => p.into(),
        _ => o,
    }
}

/// A random connected SELECT query.
///
/// Patterns are cut from a random walk through the store, so the basic
/// graph pattern has at least one solution (the walk itself); every
/// pattern after the first shares a variable with an earlier one.
/// Filters and LIMIT may still empty the result.
pub fn random_query(rng: &mut impl Rng, store: &Store) -> SelectQuery {
    let n_patterns = rng.random_range(1..=3);
    // Variables with their value in the witness solution.
    let mut witness: Vec<(String, Term)> = Vec::new();
    let mut patterns = Vec::new();
    for i in 0..n_patterns {
        let (st, join) = if i == 0 {
            let all = store.statements_matching(None, None, None);
            (all.choose(rng).unwrap().clone(), None)
        } else {
            let (var, value) = witness.choose(rng).unwrap().clone();
            let mut candidates: Vec<(nibs_kg::graph::Statement, usize)> = store
                .statements_matching(None, None, Some(&value))
                .into_iter()
                .map(|st| (st, 2))
                .collect();
            if let Term::Iri(iri) = &value {
                candidates.extend(
                    store
                        .statements_matching(Some(iri), None, None)
                        .into_iter()
                        .map(|st| (st, 0)),
                );
            }
            match candidates.choose(rng) {
                Some((st, slot)) => (st.clone(), Some((*slot, var))),
                // The value only occurs as a predicate: join on that slot.
                None => {
                    let Term::Iri(p) = &value else { unreachable!() };
                    let st = store.statements_matching(None, Some(p), None)[0].clone();
                    (st, Some((1, var)))
                }
            }
        };
        let mut slots = Vec::with_capacity(3);
        for slot in 0..3 {
            let value = slot_term(
                st.subject.clone(),
                st.predicate.clone(),
                st.object.clone(),
                slot,
            );
            let term = match &join {
                Some((js, var)) if *js == slot => PatternTerm::Var(var.clone()),
                _ => {
                    let p_var = if slot == 1 { 0.15 } else { 0.6 };
                    if rng.random_bool(p_var) {
                        let same: Vec<&String> = witness
                            .iter()
                            .filter(|(_, t)| *t == value)
                            .map(|(v, _)| v)
                            .collect();
                        match same.choose(rng) {
                            Some(v) if rng.random_bool(0.5) => PatternTerm::Var((*v).clone()),
                            _ => {
                                let v = format!("v{}", witness.len() + 1);
                                witness.push((v.clone(), value.clone()));
                                PatternTerm::Var(v)
                            }
                        }
                    } else {
                        PatternTerm::Term(value)
                    }
                }
            };
            slots.push(term);
        }
        // Later patterns join on an existing variable, so make sure the
        // first one binds something.
        if witness.is_empty() {
            witness.push(("v1".into(), st.object.clone()));
            slots[2] = PatternTerm::Var("v1".into());
        }
        let o = slots.pop().unwrap();
        let p = slots.pop().unwrap();
        let s = slots.pop().unwrap();
        patterns.push(TriplePattern::new(s, p, o));
    }
    let vars: Vec<String> = witness.iter().map(|(v, _)| v.clone()).collect();

    let ops = [
        CompareOp::Eq,
        CompareOp::Ne,
        CompareOp::Lt,
        CompareOp::Le,
        CompareOp::Gt,
        CompareOp::Ge,
    ];
    let filters = (0..rng.random_range(0..=2))
        .map(|_| {
            let (var, value) = witness.choose(rng).unwrap().clone();
            let operand = match rng.random_range(0..4) {
                0 => PatternTerm::Var(vars.choose(rng).unwrap().clone()),
                1 => PatternTerm::Term(pool_literal(rng).into()),
                2 => PatternTerm::Term(random_constant(rng, store, 2)),
                _ => PatternTerm::Term(value),
            };
            Filter {
                var,
                op: *ops.choose(rng).unwrap(),
                operand,
            }
        })
        .collect();
    let projection = if rng.random_bool(0.3) {
        Projection::All
    } else {
        let k = rng.random_range(1..=vars.len());
        Projection::Vars(vars.choose_multiple(rng, k).cloned().collect())
    };
    let order_by = rng.random_bool(0.5).then(|| OrderBy {
        var: vars.choose(rng).unwrap().clone(),
        direction: if rng.random_bool(0.5) {
            Direction::Asc
        } else {
            Direction::Desc
        },
    });
    SelectQuery {
        prefixes: Default::default(),
        projection,
        patterns,
        filters,
        distinct: rng.random_bool(0.4),
        order_by,
        limit: rng.random_bool(0.4).then(|| rng.random_range(0..20)),
    }
}

fn render_slot(t: &PatternTerm, ns: &str, out: &mut String) {
    match t {
        PatternTerm::Var(v) => {
            out.push('?');
            out.push_str(v);
        }
        PatternTerm::Term(Term::Iri(iri)) => {
            match iri.as_str().strip_prefix(&format!("{ns}/property/")) {
                Some(local) => {
                    out.push_str("p:");
                    out.push_str(local);
                }
                None => write_term(out, &Term::Iri(iri.clone())),
            }
        }
        PatternTerm::Term(t) => write_term(out, t),
    }
}

/// Renders a query as text so that the parser is part of the path under
/// test.
pub fn query_text(q: &SelectQuery, ns: &str) -> String {
    let mut out = format!("PREFIX p: <{ns}/property/>\nSELECT ");
    if q.distinct {
        out.push_str("DISTINCT ");
    }
    match &q.projection {
        Projection::All => out.push('*'),
        Projection::Vars(vs) => out.push_str(
            &vs.iter()
                .map(|v| format!("?{v}"))
                .collect::<Vec<_>>()
                .join(" "),
        ),
    }
    out.push_str(" WHERE {\n");
    for p in &q.patterns {
        out.push_str("  ");
        render_slot(&p.s, ns, &mut out);
        out.push(' ');
        render_slot(&p.p, ns, &mut out);
        out.push(' ');
        render_slot(&p.o, ns, &mut out);
        out.push_str(" .\n");
    }
    if !q.filters.is_empty() {
        out.push_str("  FILTER(");
        for (i, f) in q.filters.iter().enumerate() {
            if i > 0 {
                out.push_str(" && ");
            }
            out.push_str(&format!("?{} {} ", f.var, f.op.symbol()));
            render_slot(&f.operand, ns, &mut out);
        }
        out.push_str(")\n");
    }
    out.push('}');
    if let Some(o) = &q.order_by {
        let dir = match o.direction {
            Direction::Asc => "ASC",
            Direction::Desc => "DESC",
        };
        out.push_str(&format!("\nORDER BY {dir}(?{})", o.var));
    }
    if let Some(n) = q.limit {
        out.push_str(&format!("\nLIMIT {n}"));
    }
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Nested-loop query oracle
//
// Written from the query semantics rather than from the engine: a full
// scan per pattern in textual order, f64 arithmetic for numbers, and a
// hand-rolled total order for the result sort.

#[derive(Debug, PartialEq, Eq)]
pub enum OracleError {
    TypeMismatch,
}

fn numeric_value(t: &Term) -> Option<f64> {
    match t {
        Term::Literal(l) if matches!(l.datatype(), Datatype::Integer | Datatype::Decimal) => {
            Some(l.lexical().parse::<f64>().expect("valid numeric lexical"))
        }
        _ => None,
    }
}

fn rank(t: &Term) -> u8 {
    match t {
        Term::Iri(_) => 0,
        Term::Literal(l) => match l.datatype() {
            Datatype::Integer | Datatype::Decimal => 1,
            Datatype::Boolean => 2,
            Datatype::String => 3,
        },
    }
}

fn datatype_index(d: Datatype) -> u8 {
    match d {
        Datatype::String => 0,
        Datatype::Integer => 1,
        Datatype::Decimal => 2,
        Datatype::Boolean => 3,
    }
}

/// Total order on terms: IRIs, numbers by value, booleans, strings; ties
/// between distinct terms broken by datatype, lexical form and language.
pub fn oracle_cmp(a: &Term, b: &Term) -> Ordering {
    let by_rank = rank(a).cmp(&rank(b));
    if by_rank.is_ne() {
        return by_rank;
    }
    match (a, b) {
        (Term::Iri(x), Term::Iri(y)) => x.as_str().cmp(y.as_str()),
        (Term::Literal(x), Term::Literal(y)) => {
            let primary = match (numeric_value(a), numeric_value(b)) {
                (Some(m), Some(n)) => m.partial_cmp(&n).unwrap(),
                _ => x.lexical().cmp(y.lexical()),
            };
            primary
                .then(datatype_index(x.datatype()).cmp(&datatype_index(y.datatype())))
                .then(x.lexical().cmp(y.lexical()))
                .then(x.lang().cmp(&y.lang()))
        }
        _ => unreachable!("same rank"),
    }
}

fn oracle_filter(left: &Term, op: CompareOp, right: &Term) -> Result<bool, OracleError> {
    let ord = match (numeric_value(left), numeric_value(right)) {
        (Some(a), Some(b)) => a.partial_cmp(&b).unwrap(),
        _ => {
            let ordering_op = !matches!(op, CompareOp::Eq | CompareOp::Ne);
            if ordering_op && (rank(left) == 0) != (rank(right) == 0) {
                return Err(OracleError::TypeMismatch);
            }
            if !ordering_op {
                let same = left == right;
                return Ok((op == CompareOp::Eq) == same);
            }
            oracle_cmp(left, right)
        }
    };
    Ok(match op {
        CompareOp::Eq => ord == Ordering::Equal,
        CompareOp::Ne => ord != Ordering::Equal,
        CompareOp::Lt => ord == Ordering::Less,
        CompareOp::Le => ord != Ordering::Greater,
        CompareOp::Gt => ord == Ordering::Greater,
        CompareOp::Ge => ord != Ordering::Less,
    })
}

type Bindings = Vec<(String, Term)>;

fn lookup<'a>(b: &'a Bindings, v: &str) -> Option<&'a Term> {
    b.iter().find(|(k, _)| k == v).map(|(_, t)| t)
}

fn unify(slot: &PatternTerm, value: Term, b: &mut Bindings) -> bool {
    match slot {
        PatternTerm::Term(t) => *t == value,
        PatternTerm::Var(v) => match lookup(b, v) {
            Some(bound) => *bound == value,
            None => {
                b.push((v.clone(), value));
                true
            }
        },
    }
}

/// Evaluates `q` over a flat list of triples.
pub fn oracle_eval(
    triples: &[(Iri, Iri, Term)],
    q: &SelectQuery,
) -> Result<(Vec<String>, Vec<Vec<Term>>), OracleError> {
    let mut solutions: Vec<Bindings> = vec![Vec::new()];
    for pattern in &q.patterns {
        let mut next = Vec::new();
        for b in &solutions {
            for (s, p, o) in triples {
                let mut nb = b.clone();
                if unify(&pattern.s, s.clone().into(), &mut nb)
                    && unify(&pattern.p, p.clone().into(), &mut nb)
                    && unify(&pattern.o, o.clone(), &mut nb)
                {
                    next.push(nb);
                }
            }
        }
        solutions = next;
    }

    let mut kept = Vec::new();
    let mut mismatch = false;
    for b in solutions {
        let mut pass = true;
        for f in &q.filters {
            let left = lookup(&b, &f.var).unwrap();
            let right = match &f.operand {
                PatternTerm::Var(v) => lookup(&b, v).unwrap(),
                PatternTerm::Term(t) => t,
            };
            match oracle_filter(left, f.op, right) {
                Ok(ok) => pass = pass && ok,
                Err(_) => mismatch = true,
            }
        }
        if pass {
            kept.push(b);
        }
    }
    if mismatch {
        return Err(OracleError::TypeMismatch);
    }

    let mut header: Vec<String> = Vec::new();
    match &q.projection {
        Projection::Vars(vs) => header = vs.clone(),
        Projection::All => {
            for p in &q.patterns {
                for v in [&p.s, &p.p, &p.o].into_iter().filter_map(|s| s.var()) {
                    if !header.iter().any(|h| h == v) {
                        header.push(v.to_string());
                    }
                }
            }
        }
    }
    let mut rows: Vec<(Option<Term>, Vec<Term>)> = kept
        .iter()
        .map(|b| {
            (
                q.order_by
                    .as_ref()
                    .map(|o| lookup(b, &o.var).unwrap().clone()),
                header
                    .iter()
                    .map(|h| lookup(b, h).unwrap().clone())
                    .collect(),
            )
        })
        .collect();
    let desc = matches!(
        q.order_by,
        Some(OrderBy {
            direction: Direction::Desc,
            ..
        })
    );
    rows.sort_by(|(ka, ra), (kb, rb)| {
        let mut key = match (ka, kb) {
            (Some(a), Some(b)) => oracle_cmp(a, b),
            _ => Ordering::Equal,
        };
        if desc {
            key = key.reverse();
        }
        key.then_with(|| {
            for (a, b) in ra.iter().zip(rb) {
                let o = oracle_cmp(a, b);
                if o.is_ne() {
                    return o;
                }
            }
            Ordering::Equal
        })
    });
    let mut seen = std::collections::HashSet::new();
    let mut out: Vec<Vec<Term>> = Vec::new();
    for (_, row) in rows {
        if q.distinct && !seen.insert(row.clone()) {
            continue;
        }
        out.push(row);
    }
    if let Some(n) = q.limit {
        out.truncate(n);
    }
    Ok((header, out))
}

pub fn flat_triples(store: &Store) -> Vec<(Iri, Iri, Term)> {
    store
        .statements_matching(None, None, None)
        .into_iter()
        .map(|s| (s.subject, s.predicate, s.object))
        .collect()
}
