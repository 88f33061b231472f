//! Turning study tables into paper and contribution subgraphs.
//!
//! Every record becomes one paper entity carrying one contribution typed as
//! the template's target class. Tokens that cannot be resolved are still
//! recorded (as plain string literals) so that validation reports them
//! instead of the ingest silently dropping them.

mod csv;
mod synth;

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{numeric, EntityKind, GraphError, Iri, Literal, Store, Term};
use crate::template::{validate, Template, TemplateError, ValidationReport, ViolationCode};
use crate::vocabulary::{TermLookup, ValueRange, VocabularyManifest};

pub use self::csv::{
    parse_csv, read_headers, split_cell, standard_headers, write_csv, ColumnMapping, ColumnTarget,
    MULTI_VALUE_SEPARATOR,
};
pub use synth::generate_synthetic_corpus;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed CSV at row {row}: {reason}")]
    MalformedCsv { row: u64, reason: String },
    #[error("no column is mapped to the paper title")]
    MissingTitleColumn,
    #[error("mapping line {line}: {reason}")]
    Mapping { line: usize, reason: String },
    #[error("record uses unknown property {0:?}")]
    UnknownProperty(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// One row of a study table. Dose values are keyed by canonical property
/// label and keep their input order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StudyRecord {
    pub title: String,
    pub doi: Option<String>,
    pub year: Option<i64>,
    pub first_author: Option<String>,
    pub values: IndexMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contribution {
    pub iri: Iri,
    pub paper: Iri,
    /// Ordinals of every statement added for this record.
    pub statements: Vec<u64>,
    /// Ordinals of the dose-value statements only.
    pub dose_statements: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub total: usize,
    pub conforming: usize,
    pub with_violations: usize,
    /// `(property label, raw token)` → occurrences.
    pub unresolved_tokens: BTreeMap<(String, String), usize>,
    pub contributions: Vec<Iri>,
    /// Reports of the non-conforming contributions.
    pub reports: Vec<ValidationReport>,
}

/// Entity labels may not contain control characters; titles can.
fn entity_label(raw: &str) -> String {
    let cleaned: String = raw
        .chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    let cleaned = cleaned.split_whitespace().collect::<Vec<_>>().join(" ");
    if cleaned.is_empty() {
        "untitled".to_string()
    } else {
        cleaned
    }
}

struct Unresolved {
    property: String,
    token: String,
    candidates: Vec<String>,
}

/// Materializes one record and validates the resulting contribution.
pub fn record_to_contribution(
    store: &mut Store,
    manifest: &VocabularyManifest,
    template: &Template,
    record: &StudyRecord,
) -> Result<(Contribution, ValidationReport), IngestError> {
    let (contribution, report, _) = materialize(store, manifest, template, record)?;
    Ok((contribution, report))
}

fn materialize(
    store: &mut Store,
    manifest: &VocabularyManifest,
    template: &Template,
    record: &StudyRecord,
) -> Result<(Contribution, ValidationReport, Vec<Unresolved>), IngestError> {
    // Resolve property labels up front so a bad record leaves no trace.
    let mut values = Vec::with_capacity(record.values.len());
    for (label, tokens) in &record.values {
        let spec = manifest
            .property_by_label(label)
            .ok_or_else(|| IngestError::UnknownProperty(label.clone()))?;
        values.push((spec, tokens));
    }

    let paper_props = &manifest.paper;
    let type_pred = store.type_predicate().clone();
    let label = entity_label(&record.title);
    let mut statements = Vec::new();

    let paper = store.mint_entity(EntityKind::Resource, &label, None)?;
    statements.push(store.add_statement(&paper, &type_pred, paper_props.paper_class.clone())?);
    statements.push(store.add_statement(
        &paper,
        &paper_props.title,
        Literal::string(&record.title),
    )?);
    if let Some(doi) = &record.doi {
        statements.push(store.add_statement(&paper, &paper_props.doi, Literal::string(doi))?);
    }
    if let Some(year) = record.year {
        statements.push(store.add_statement(&paper, &paper_props.year, Literal::integer(year))?);
    }
    if let Some(author) = &record.first_author {
        statements.push(store.add_statement(
            &paper,
            &paper_props.first_author,
            Literal::string(author),
        )?);
    }

    let contribution =
        store.mint_entity(EntityKind::Resource, &format!("{label} (rTMS dose)"), None)?;
    statements.push(store.add_statement(
        &contribution,
        &type_pred,
        template.target_class.clone(),
    )?);
    statements.push(store.add_statement(
        &paper,
        &paper_props.has_contribution,
        contribution.clone(),
    )?);

    let mut unresolved = Vec::new();
    let mut dose_statements = Vec::new();
    for (spec, tokens) in values {
        for token in tokens.iter() {
            let object: Term = match &spec.range {
                ValueRange::Controlled { .. } => {
                    match manifest
                        .lookup_term(&spec.iri, token)
                        .expect("controlled property")
                    {
                        TermLookup::Match(term) => term.iri.clone().into(),
                        TermLookup::NoMatch => {
                            unresolved.push(Unresolved {
                                property: spec.label.clone(),
                                token: token.clone(),
                                candidates: Vec::new(),
                            });
                            Literal::string(token).into()
                        }
                        TermLookup::Ambiguous(hits) => {
                            unresolved.push(Unresolved {
                                property: spec.label.clone(),
                                token: token.clone(),
                                candidates: hits.iter().map(|t| t.label.clone()).collect(),
                            });
                            Literal::string(token).into()
                        }
                    }
                }
                ValueRange::Decimal if numeric::is_decimal(token) => {
                    Literal::decimal(token.as_str()).expect("checked").into()
                }
                ValueRange::Integer if numeric::is_integer(token) => match token.parse::<i64>() {
                    Ok(v) => Literal::integer(v).into(),
                    Err(_) => Literal::string(token).into(),
                },
                ValueRange::String => Literal::string(token).into(),
                ValueRange::Decimal | ValueRange::Integer => {
                    unresolved.push(Unresolved {
                        property: spec.label.clone(),
                        token: token.clone(),
                        candidates: Vec::new(),
                    });
                    Literal::string(token).into()
                }
            };
            let ordinal = store.add_statement(&contribution, &spec.iri, object)?;
            statements.push(ordinal);
            dose_statements.push(ordinal);
        }
    }

    let mut report = validate(store, &contribution, template)?;
    for u in unresolved.iter().filter(|u| !u.candidates.is_empty()) {
        let needle = format!("value {:?}", u.token);
        let hit = report.violations.iter_mut().find(|v| {
            v.code == ViolationCode::NotInVocabulary
                && v.shape.as_deref() == Some(u.property.as_str())
                && v.detail.starts_with(&needle)
        });
        if let Some(v) = hit {
            v.detail
                .push_str(&format!("; ambiguous between {}", u.candidates.join(", ")));
        }
    }
    Ok((
        Contribution {
            iri: contribution,
            paper,
            statements,
            dose_statements,
        },
        report,
        unresolved,
    ))
}

/// Materializes every record in order and tallies the validation outcome.
pub fn ingest_corpus(
    store: &mut Store,
    manifest: &VocabularyManifest,
    template: &Template,
    records: &[StudyRecord],
) -> Result<IngestSummary, IngestError> {
    let mut summary = IngestSummary::default();
    for record in records {
        let (contribution, report, unresolved) = materialize(store, manifest, template, record)?;
        summary.total += 1;
        for u in unresolved {
            *summary
                .unresolved_tokens
                .entry((u.property, u.token))
                .or_default() += 1;
        }
        summary.contributions.push(contribution.iri);
        if report.conforms() {
            summary.conforming += 1;
        } else {
            summary.with_violations += 1;
            summary.reports.push(report);
        }
    }
    Ok(summary)
}
