//! Index-nested-loop evaluation of basic graph patterns.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use crate::graph::{Iri, Store, Term};

use super::{
    compare_terms, Direction, PatternTerm, QueryError, ResultTable, SelectQuery, TriplePattern,
};

type Binding = Vec<Option<Term>>;

fn constant(t: &PatternTerm) -> Option<&Term> {
    match t {
        PatternTerm::Term(term) => Some(term),
        PatternTerm::Var(_) => None,
    }
}

/// Static selectivity of a pattern: how many statements match its
/// constants, ignoring variables.
fn estimate(store: &Store, pattern: &TriplePattern) -> usize {
    // A literal subject or predicate never matches.
    let (Ok(s), Ok(p)) = (as_iri(constant(&pattern.s)), as_iri(constant(&pattern.p))) else {
        return 0;
    };
    store.match_estimate(s, p, constant(&pattern.o))
}

/// Execution order of the patterns: most selective first, preferring
/// patterns that share a variable with those already placed.
pub fn plan(store: &Store, query: &SelectQuery) -> Vec<usize> {
    let estimates: Vec<usize> = query.patterns.iter().map(|p| estimate(store, p)).collect();
    let mut remaining: Vec<usize> = (0..query.patterns.len()).collect();
    let mut bound: HashSet<&str> = HashSet::new();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let (pos, &next) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &i)| {
                let pattern = &query.patterns[i];
                let connected = bound.is_empty() || pattern.vars().any(|v| bound.contains(v));
                (!connected, estimates[i], i)
            })
            .expect("non-empty");
        remaining.remove(pos);
        bound.extend(query.patterns[next].vars());
        order.push(next);
    }
    order
}

struct Slots<'q> {
    index: HashMap<&'q str, usize>,
}

impl<'q> Slots<'q> {
    fn resolve<'a>(&self, t: &'a PatternTerm, binding: &'a Binding) -> Option<&'a Term> {
        match t {
            PatternTerm::Term(term) => Some(term),
            PatternTerm::Var(v) => binding[self.index[v.as_str()]].as_ref(),
        }
    }

    /// Binds `t` to `value`, failing on a conflicting earlier binding.
    fn bind(&self, t: &PatternTerm, value: Term, binding: &mut Binding) -> bool {
        let PatternTerm::Var(v) = t else {
            return true;
        };
        let slot = &mut binding[self.index[v.as_str()]];
        match slot {
            Some(existing) => *existing == value,
            None => {
                *slot = Some(value);
                true
            }
        }
    }
}

fn as_iri(t: Option<&Term>) -> Result<Option<&Iri>, ()> {
    match t {
        None => Ok(None),
        Some(Term::Iri(iri)) => Ok(Some(iri)),
        Some(Term::Literal(_)) => Err(()),
    }
}

fn extend(
    store: &Store,
    slots: &Slots<'_>,
    pattern: &TriplePattern,
    binding: &Binding,
    out: &mut Vec<Binding>,
) {
    let (Ok(s), Ok(p)) = (
        as_iri(slots.resolve(&pattern.s, binding)),
        as_iri(slots.resolve(&pattern.p, binding)),
    ) else {
        return;
    };
    let o = slots.resolve(&pattern.o, binding);
    for st in store.statements_matching(s, p, o) {
        let mut next = binding.clone();
        if slots.bind(&pattern.s, st.subject.into(), &mut next)
            && slots.bind(&pattern.p, st.predicate.into(), &mut next)
            && slots.bind(&pattern.o, st.object, &mut next)
        {
            out.push(next);
        }
    }
}

/// Orders rows by the optional sort key, then by the projected values.
pub(crate) fn canonical_order(rows: &mut [(Option<Term>, Vec<Term>)], direction: Direction) {
    rows.sort_by(|(ka, ra), (kb, rb)| {
        let by_key = match (ka, kb) {
            (Some(a), Some(b)) => a.value_cmp(b),
            _ => Ordering::Equal,
        };
        let by_key = match direction {
            Direction::Asc => by_key,
            Direction::Desc => by_key.reverse(),
        };
        by_key.then_with(|| {
            ra.iter()
                .zip(rb)
                .map(|(a, b)| a.value_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    });
}

/// Runs a parsed query. Filters are applied to every solution of the
/// graph pattern; an ordering comparison between a literal and an IRI
/// fails the whole query.
pub fn execute(store: &Store, query: &SelectQuery) -> Result<ResultTable, QueryError> {
    query.check_bound()?;
    let vars = query.pattern_vars();
    let slots = Slots {
        index: vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect(),
    };

    let mut solutions: Vec<Binding> = vec![vec![None; vars.len()]];
    for i in plan(store, query) {
        let pattern = &query.patterns[i];
        let mut next = Vec::new();
        for binding in &solutions {
            extend(store, &slots, pattern, binding, &mut next);
        }
        solutions = next;
        if solutions.is_empty() {
            break;
        }
    }

    let value = |b: &Binding, var: &str| b[slots.index[var]].clone().expect("bound by BGP");
    let mut kept = Vec::with_capacity(solutions.len());
    let mut error = None;
    for binding in solutions {
        let mut pass = true;
        for f in &query.filters {
            let left = value(&binding, &f.var);
            let right = match &f.operand {
                PatternTerm::Var(v) => value(&binding, v),
                PatternTerm::Term(t) => t.clone(),
            };
            match compare_terms(&left, f.op, &right) {
                Ok(ok) => pass &= ok,
                Err(e) => {
                    error.get_or_insert(e);
                }
            }
        }
        if pass {
            kept.push(binding);
        }
    }
    if let Some(e) = error {
        return Err(e);
    }

    let header = query.header();
    let mut rows: Vec<(Option<Term>, Vec<Term>)> = kept
        .iter()
        .map(|b| {
            let key = query.order_by.as_ref().map(|o| value(b, &o.var));
            (key, header.iter().map(|h| value(b, h)).collect())
        })
        .collect();
    let direction = query
        .order_by
        .as_ref()
        .map_or(Direction::Asc, |o| o.direction);
    canonical_order(&mut rows, direction);

    let mut table = ResultTable {
        header,
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    };
    if query.distinct {
        table = table.distinct();
    }
    if let Some(limit) = query.limit {
        table.rows.truncate(limit);
    }
    Ok(table)
}
