//! The rTMS dose vocabulary: fifteen properties, their controlled term
//! sets, and resolution of raw tokens against those terms.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{EntityKind, GraphError, Iri, Store, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabularyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid external IRI {0:?}")]
    InvalidIri(String),
    #[error("property {0} does not have a controlled range")]
    NotControlled(Iri),
}

/// Static definition of a controlled term.
#[derive(Debug, Clone, Copy)]
pub struct TermDef {
    pub label: &'static str,
    pub description: Option<&'static str>,
    /// Alternative spellings registered as aliases.
    pub spellings: &'static [&'static str],
}

#[derive(Debug, Clone, Copy)]
pub enum RangeDef {
    Controlled(&'static [TermDef]),
    Decimal,
}

/// Static definition of a dose property.
#[derive(Debug, Clone, Copy)]
pub struct PropertyDef {
    pub label: &'static str,
    pub range: RangeDef,
    pub unit: Option<&'static str>,
    pub aliases: &'static [&'static str],
    pub sub_properties: &'static [PropertyDef],
}

const fn term(label: &'static str) -> TermDef {
    TermDef {
        label,
        description: None,
        spellings: &[],
    }
}

const fn described(label: &'static str, description: &'static str) -> TermDef {
    TermDef {
        label,
        description: Some(description),
        spellings: &[],
    }
}

const fn decimal(label: &'static str, unit: Option<&'static str>) -> PropertyDef {
    PropertyDef {
        label,
        range: RangeDef::Decimal,
        unit,
        aliases: &[],
        sub_properties: &[],
    }
}

const fn controlled(label: &'static str, terms: &'static [TermDef]) -> PropertyDef {
    PropertyDef {
        label,
        range: RangeDef::Controlled(terms),
        unit: None,
        aliases: &[],
        sub_properties: &[],
    }
}

pub const TYPE_OF_RTMS: &str = "Type of rTMS";
pub const PERCENT_OF_STIMULATION_INTENSITY: &str = "Percent of Stimulation Intensity";

/// The dose properties in table order, with every controlled term.
pub const RTMS_PROPERTIES: [PropertyDef; 15] = [
    controlled(
        TYPE_OF_RTMS,
        &[
            described("rTMS", "Conventional rTMS"),
            described("iTBS", "Intermittent theta burst stimulation"),
            described("cTBS", "Continuous theta burst stimulation"),
            described("QPS", "Quadripulse stimulation"),
        ],
    ),
    PropertyDef {
        aliases: &["intraburst frequency"],
        ..decimal("Intrabust Frequency", Some("Hz"))
    },
    controlled(
        "Stimulation Intensity Selection Approach",
        &[
            described("AMT", "Active motor threshold"),
            described("RMT", "Resting motor threshold"),
            described("MT", "Unspecified motor threshold"),
            described("FL", "Functional lesion"),
            described("PT", "Phosphene threshold"),
            described("FXD", "Fixed intensity"),
            described("EF", "Electric field"),
        ],
    ),
    controlled(
        "Threshold-estimation strategies",
        &[
            described("ML", "Method of limit"),
            described("5STEP", "5 step procedure"),
            described("TH", "Threshold hunting"),
            described("MLTH", "Maximum likelihood based threshold hunting"),
            described("PEST", "Parameter estimation by sequential testing"),
            described("MTAT", "TMS Motor Threshold Assessment Tool"),
        ],
    ),
    controlled(
        "Threshold Measurement",
        &[described("E", "Electrode"), described("V", "Visual")],
    ),
    decimal("Amplitude of the Motor Evoked Potential (mV)", Some("mV")),
    decimal("Threshold Ratio", None),
    decimal(
        "Percentage or the Amplitude of the Motor Threshold Contraction",
        None,
    ),
    PropertyDef {
        label: PERCENT_OF_STIMULATION_INTENSITY,
        range: RangeDef::Decimal,
        unit: Some("%"),
        aliases: &[],
        sub_properties: &[
            decimal("Percent of Stimulation Intensity (Min value)", Some("%")),
            decimal("Percent of Stimulation Intensity (Max value)", Some("%")),
        ],
    },
    decimal("Maximum Stimulator Output", None),
    controlled(
        "Stimulator Company",
        &[
            term("Cad"),
            term("MedDan"),
            term("MagSti"),
            term("NeoNet"),
            term("NeuNet"),
            term("MagVen"),
            term("NexSti"),
            term("MagMor"),
            term("Yir"),
            term("BraSwa"),
            term("DeyDia"),
            term("YunTec"),
            term("NeuSof"),
        ],
    ),
    controlled(
        "Stimulator Model",
        &[
            term("HS"),
            term("MP"),
            term("MES10"),
            term("R"),
            term("SR"),
            term("SR2"),
            term("NP"),
            term("16E05"),
            term("200"),
            TermDef {
                label: "200 2",
                description: None,
                spellings: &["200_2"],
            },
            term("MLR25"),
            TermDef {
                label: "200 BI",
                description: None,
                spellings: &["200_BI"],
            },
            term("QP500"),
            term("HF"),
            term("MP30"),
            term("MPX100"),
            term("2100CRS"),
            term("MP100"),
            term("R2"),
            term("MPR30"),
            term("NBS"),
            term("PM100"),
            term("CCYI"),
            term("CCYIA"),
            term("DMXT"),
            term("NS"),
            term("Sys4.3"),
            term("R2P1"),
            term("N-MS/D"),
            term("MPC"),
            term("MS/D"),
        ],
    ),
    controlled(
        "Coil Shape",
        &[term("F8"), term("R"), term("F8-D"), term("D")],
    ),
    decimal("Coil Size", None),
    controlled(
        "Coil Model",
        &[
            term("MC125"),
            term("MC-125"),
            term("MC-B70"),
            term("MCF-B70"),
            term("MCF-B-65"),
            term("MCF-B65"),
            term("WC"),
            term("AC"),
            term("DC"),
            term("PN9925"),
            term("992500"),
            term("C-B60"),
            term("FC"),
            term("FC-B70"),
            term("HP"),
            term("Cool B65"),
            term("cool-B65"),
            term("Cool-DB80"),
            term("Cool B56"),
            term("H-ADD"),
            term("H"),
            term("H1"),
            term("AF"),
            term("DB-80"),
            term("B65"),
            term("MMC-140"),
            term("70BF-Cool"),
        ],
    ),
];

pub const PAPER_CLASS: &str = "Paper";
pub const TITLE: &str = "title";
pub const DOI: &str = "doi";
pub const PUBLICATION_YEAR: &str = "publication year";
pub const FIRST_AUTHOR: &str = "first author";
pub const HAS_CONTRIBUTION: &str = "has contribution";

const MEP_UNIT_NOTE: &str = "Amplitude of the Motor Evoked Potential: the tabular listing gives millivolts (mV) while the prose describes microvolts; values are recorded in mV.";

/// Lowercases and collapses runs of spaces, hyphens and underscores into a
/// single space.
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_sep = false;
    for c in raw.trim().chars() {
        if matches!(c, ' ' | '-' | '_') || c.is_whitespace() {
            pending_sep = true;
            continue;
        }
        if pending_sep && !out.is_empty() {
            out.push(' ');
        }
        pending_sep = false;
        out.extend(c.to_lowercase());
    }
    out
}

fn aliases_for(label: &str, extra: &[&str]) -> BTreeSet<String> {
    std::iter::once(label)
        .chain(extra.iter().copied())
        .map(normalize)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlledTerm {
    pub label: String,
    pub iri: Iri,
    pub description: Option<String>,
    pub aliases: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ValueRange {
    Controlled {
        class: Iri,
        terms: Vec<ControlledTerm>,
    },
    Decimal,
    Integer,
    String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertySpec {
    pub label: String,
    pub iri: Iri,
    pub range: ValueRange,
    pub unit: Option<String>,
    pub aliases: BTreeSet<String>,
    pub sub_properties: Vec<PropertySpec>,
}

impl PropertySpec {
    pub fn terms(&self) -> &[ControlledTerm] {
        match &self.range {
            ValueRange::Controlled { terms, .. } => terms,
            _ => &[],
        }
    }

    pub fn is_controlled(&self) -> bool {
        matches!(self.range, ValueRange::Controlled { .. })
    }
}

/// Properties describing the paper node a contribution hangs off.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaperProperties {
    pub paper_class: Iri,
    pub title: Iri,
    pub doi: Iri,
    pub year: Iri,
    pub first_author: Iri,
    pub has_contribution: Iri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VocabularyManifest {
    pub properties: Vec<PropertySpec>,
    pub same_as_predicate: Iri,
    pub paper: PaperProperties,
    pub notes: Vec<String>,
}

/// Result of resolving a raw token against a controlled term set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermLookup<'a> {
    Match(&'a ControlledTerm),
    NoMatch,
    Ambiguous(Vec<&'a ControlledTerm>),
}

impl VocabularyManifest {
    /// Top-level properties followed by their sub-properties, depth first.
    pub fn all_properties(&self) -> impl Iterator<Item = &PropertySpec> {
        self.properties
            .iter()
            .flat_map(|p| std::iter::once(p).chain(p.sub_properties.iter()))
    }

    pub fn property(&self, iri: &Iri) -> Option<&PropertySpec> {
        self.all_properties().find(|p| p.iri == *iri)
    }

    /// Finds a property by label, trying the exact label first and then the
    /// normalized label and aliases.
    pub fn property_by_label(&self, label: &str) -> Option<&PropertySpec> {
        let label = label.trim();
        if let Some(p) = self.all_properties().find(|p| p.label == label) {
            return Some(p);
        }
        let key = normalize(label);
        let mut hits = self.all_properties().filter(|p| p.aliases.contains(&key));
        match (hits.next(), hits.next()) {
            (Some(p), None) => Some(p),
            _ => None,
        }
    }

    pub fn controlled_term_count(&self) -> usize {
        self.all_properties().map(|p| p.terms().len()).sum()
    }

    pub fn term(&self, property: &Iri, label: &str) -> Option<&ControlledTerm> {
        self.property(property)?
            .terms()
            .iter()
            .find(|t| t.label == label)
    }

    /// Resolves a raw token. An exact label match wins; otherwise the
    /// normalized token must select exactly one term.
    pub fn lookup_term(
        &self,
        property: &Iri,
        raw: &str,
    ) -> Result<TermLookup<'_>, VocabularyError> {
        let spec = self
            .property(property)
            .filter(|p| p.is_controlled())
            .ok_or_else(|| VocabularyError::NotControlled(property.clone()))?;
        let raw = raw.trim();
        if let Some(t) = spec.terms().iter().find(|t| t.label == raw) {
            return Ok(TermLookup::Match(t));
        }
        let key = normalize(raw);
        let hits: Vec<&ControlledTerm> = spec
            .terms()
            .iter()
            .filter(|t| t.aliases.contains(&key))
            .collect();
        Ok(match hits.len() {
            0 => TermLookup::NoMatch,
            1 => TermLookup::Match(hits[0]),
            _ => TermLookup::Ambiguous(hits),
        })
    }

    /// Tab-separated `property \t term \t iri` listing for curators.
    pub fn export_tsv(&self) -> String {
        let mut out = String::new();
        for p in self.all_properties() {
            for t in p.terms() {
                let _ = writeln!(out, "{}\t{}\t{}", p.label, t.label, t.iri);
            }
        }
        out
    }
}

fn ensure(store: &mut Store, kind: EntityKind, label: &str) -> Result<Iri, GraphError> {
    let existing = store
        .find_entities(kind, label)
        .next()
        .map(|e| e.iri.clone());
    match existing {
        Some(iri) => Ok(iri),
        None => store.mint_entity(kind, label, None),
    }
}

/// Returns the entity of `kind` with `label` typed as `class`, minting it
/// if needed.
pub(crate) fn ensure_instance(
    store: &mut Store,
    kind: EntityKind,
    class: &Iri,
    label: &str,
) -> Result<Iri, GraphError> {
    let existing = store
        .find_entities(kind, label)
        .map(|e| e.iri.clone())
        .find(|iri| store.has_type(iri, class));
    if let Some(iri) = existing {
        return Ok(iri);
    }
    let iri = store.mint_entity(kind, label, None)?;
    let type_pred = store.type_predicate().clone();
    store.add_statement(&iri, &type_pred, class.clone())?;
    Ok(iri)
}

pub(crate) fn ensure_property(store: &mut Store, label: &str) -> Result<Iri, GraphError> {
    ensure(store, EntityKind::Property, label)
}

pub(crate) fn ensure_class(store: &mut Store, label: &str) -> Result<Iri, GraphError> {
    ensure(store, EntityKind::Class, label)
}

fn seed_property(store: &mut Store, def: &PropertyDef) -> Result<PropertySpec, GraphError> {
    let iri = ensure_property(store, def.label)?;
    let range = match def.range {
        RangeDef::Decimal => ValueRange::Decimal,
        RangeDef::Controlled(terms) => {
            let class = ensure_class(store, def.label)?;
            let terms = terms
                .iter()
                .map(|t| {
                    Ok(ControlledTerm {
                        label: t.label.to_string(),
                        iri: ensure_instance(store, EntityKind::Resource, &class, t.label)?,
                        description: t.description.map(str::to_string),
                        aliases: aliases_for(t.label, t.spellings),
                    })
                })
                .collect::<Result<_, GraphError>>()?;
            ValueRange::Controlled { class, terms }
        }
    };
    let sub_properties = def
        .sub_properties
        .iter()
        .map(|sub| seed_property(store, sub))
        .collect::<Result<_, _>>()?;
    Ok(PropertySpec {
        label: def.label.to_string(),
        iri,
        range,
        unit: def.unit.map(str::to_string),
        aliases: aliases_for(def.label, def.aliases),
        sub_properties,
    })
}

/// Mints every dose property, controlled class and term, plus the paper
/// metadata properties. Seeding an already seeded store changes nothing.
pub fn seed_rtms_vocabulary(store: &mut Store) -> Result<VocabularyManifest, VocabularyError> {
    let properties = RTMS_PROPERTIES
        .iter()
        .map(|def| seed_property(store, def))
        .collect::<Result<Vec<_>, _>>()?;
    let paper = PaperProperties {
        paper_class: ensure_class(store, PAPER_CLASS)?,
        title: ensure_property(store, TITLE)?,
        doi: ensure_property(store, DOI)?,
        year: ensure_property(store, PUBLICATION_YEAR)?,
        first_author: ensure_property(store, FIRST_AUTHOR)?,
        has_contribution: ensure_property(store, HAS_CONTRIBUTION)?,
    };
    Ok(VocabularyManifest {
        properties,
        same_as_predicate: store.same_as_predicate().clone(),
        paper,
        notes: vec![MEP_UNIT_NOTE.to_string()],
    })
}

/// Asserts that a local entity is the same as an external ontology term.
pub fn same_as_link(
    store: &mut Store,
    local: &Iri,
    external: &str,
) -> Result<u64, VocabularyError> {
    if store.entity(local).is_none() {
        return Err(GraphError::UnknownEntity(local.to_string()).into());
    }
    let external_iri =
        Iri::parse(external).map_err(|_| VocabularyError::InvalidIri(external.to_string()))?;
    store
        .register_external(&external_iri, EntityKind::Resource)
        .map_err(|_| VocabularyError::InvalidIri(external.to_string()))?;
    let predicate = store.same_as_predicate().clone();
    Ok(store.add_statement(local, &predicate, Term::Iri(external_iri))?)
}
