//! Property-aligned comparison tables over contributions, chunked into
//! parts and published with versioned pseudo-DOIs.

mod export;
mod publish;

use std::collections::BTreeSet;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, Iri, Store, Term};
use crate::template::{render_value, Template};
use crate::vocabulary::VocabularyManifest;

pub use export::{export_comparison, ExportFormat};
pub use publish::{
    publish_comparison, PublicationMetadata, PublicationRecord, PublicationRegistry, DOI_PREFIX,
};

#[derive(Debug, Error)]
pub enum ComparisonError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("chunk size must be at least 1, got {0}")]
    InvalidChunkSize(usize),
    #[error("cannot publish a comparison without contributions")]
    EmptyTable,
    #[error("unknown publication {0}")]
    UnknownPublication(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyMode {
    /// Every property used by any contribution.
    #[default]
    Union,
    /// Only properties used by all contributions.
    Intersection,
}

/// Part `k` of `n`, counted from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartIndex {
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparedContribution {
    pub title: String,
    pub contribution: Iri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub property: String,
    pub property_iri: Iri,
    /// One cell per contribution; each cell lists rendered values in
    /// sorted order and is empty when the value is absent.
    pub cells: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonTable {
    /// Persistent identifier; `None` until published.
    pub id: Option<String>,
    /// Publication version; `None` until published.
    pub version: Option<u32>,
    pub created_at: DateTime<Utc>,
    pub contributions: Vec<ComparedContribution>,
    pub rows: Vec<ComparisonRow>,
    pub part_index: Option<PartIndex>,
}

impl ComparisonTable {
    /// Equality of what the table shows, ignoring identity and timestamps.
    pub fn same_content(&self, other: &ComparisonTable) -> bool {
        self.contributions == other.contributions
            && self.rows == other.rows
            && self.part_index == other.part_index
    }

    pub fn row(&self, property: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.property == property)
    }
}

/// Rendered form of a cell value: term labels for IRIs, minimal lexical
/// forms for numbers.
pub fn render_cell_value(store: &Store, term: &Term) -> String {
    match term {
        Term::Literal(lit) if lit.is_numeric() => lit.canonical_lexical(),
        other => render_value(store, other),
    }
}

fn paper_title(store: &Store, manifest: &VocabularyManifest, contribution: &Iri) -> String {
    let paper = store
        .statements_matching(
            None,
            Some(&manifest.paper.has_contribution),
            Some(&contribution.clone().into()),
        )
        .into_iter()
        .next()
        .map(|st| st.subject);
    let title = paper.and_then(|p| {
        store
            .objects(&p, &manifest.paper.title)
            .into_iter()
            .find_map(|t| t.as_literal().map(|l| l.lexical().to_string()))
    });
    title.unwrap_or_else(|| {
        store
            .label(contribution)
            .unwrap_or(contribution.as_str())
            .to_string()
    })
}

/// Aligns the given contributions property by property. Template
/// properties come first in template order, the rest follow sorted by
/// label.
pub fn build_comparison(
    store: &Store,
    manifest: &VocabularyManifest,
    template: &Template,
    contributions: &[Iri],
    mode: PropertyMode,
) -> Result<ComparisonTable, ComparisonError> {
    let type_pred = store.type_predicate();
    let mut per_contribution: Vec<BTreeSet<Iri>> = Vec::with_capacity(contributions.len());
    for c in contributions {
        if store.entity(c).is_none() {
            return Err(GraphError::UnknownEntity(c.to_string()).into());
        }
        per_contribution.push(
            store
                .statements_matching(Some(c), None, None)
                .into_iter()
                .map(|st| st.predicate)
                .filter(|p| p != type_pred)
                .collect(),
        );
    }
    let properties: BTreeSet<Iri> = match mode {
        PropertyMode::Union => per_contribution.iter().flatten().cloned().collect(),
        PropertyMode::Intersection => match per_contribution.split_first() {
            None => BTreeSet::new(),
            Some((first, rest)) => first
                .iter()
                .filter(|p| rest.iter().all(|set| set.contains(*p)))
                .cloned()
                .collect(),
        },
    };

    let label_of = |p: &Iri| store.label(p).unwrap_or(p.as_str()).to_string();
    let mut ordered: Vec<&Iri> = template
        .all_shapes()
        .map(|s| &s.property)
        .filter(|p| properties.contains(*p))
        .collect();
    let mut extra: Vec<&Iri> = properties
        .iter()
        .filter(|p| template.shape_for(p).is_none())
        .collect();
    extra.sort_by_key(|p| (label_of(p), p.as_str().to_string()));
    ordered.extend(extra);

    let rows = ordered
        .into_iter()
        .map(|p| ComparisonRow {
            property: label_of(p),
            property_iri: p.clone(),
            cells: contributions
                .iter()
                .map(|c| {
                    let mut values: Vec<String> = store
                        .objects(c, p)
                        .iter()
                        .map(|t| render_cell_value(store, t))
                        .collect();
                    values.sort();
                    values
                })
                .collect(),
        })
        .collect();

    Ok(ComparisonTable {
        id: None,
        version: None,
        created_at: Utc::now(),
        contributions: contributions
            .iter()
            .map(|c| ComparedContribution {
                title: paper_title(store, manifest, c),
                contribution: c.clone(),
            })
            .collect(),
        rows,
        part_index: None,
    })
}

/// Splits the contributions, in input order, into `ceil(n / chunk_size)`
/// tables numbered `k of n`.
pub fn chunk_comparisons(
    store: &Store,
    manifest: &VocabularyManifest,
    template: &Template,
    contributions: &[Iri],
    chunk_size: usize,
    mode: PropertyMode,
) -> Result<Vec<ComparisonTable>, ComparisonError> {
    if chunk_size < 1 {
        return Err(ComparisonError::InvalidChunkSize(chunk_size));
    }
    let n = contributions.len().div_ceil(chunk_size);
    contributions
        .chunks(chunk_size)
        .enumerate()
        .map(|(i, chunk)| {
            let mut table = build_comparison(store, manifest, template, chunk, mode)?;
            table.part_index = Some(PartIndex { k: i + 1, n });
            Ok(table)
        })
        .collect()
}

/// Contributions of the template's target class in registration order.
pub fn contributions_in_store(store: &Store, template: &Template) -> Vec<Iri> {
    store.instances_of(&template.target_class)
}
