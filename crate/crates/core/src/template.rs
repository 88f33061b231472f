//! Property shapes over the dose vocabulary and validation of contribution
//! subgraphs against them.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Datatype, EntityKind, GraphError, Iri, Literal, Store, Term};
use crate::vocabulary::{
    ensure_class, ensure_instance, ensure_property, PropertySpec, ValueRange, VocabularyManifest,
    TYPE_OF_RTMS,
};

pub const TEMPLATE_LABEL: &str = "rTMS Dose Template";
pub const TARGET_CLASS_LABEL: &str = "rTMS Dose";
const SHAPE_CLASS_LABEL: &str = "Property Shape";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeRange {
    Controlled(Iri),
    Datatype(Datatype),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyShape {
    /// Named resource describing this shape in the graph.
    pub iri: Iri,
    pub property: Iri,
    pub label: String,
    pub range: ShapeRange,
    pub min_count: u32,
    /// `None` means unbounded.
    pub max_count: Option<u32>,
    pub sub_shapes: Vec<PropertyShape>,
}

impl PropertyShape {
    pub fn required(&self) -> bool {
        self.min_count >= 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Template {
    pub iri: Iri,
    pub label: String,
    pub target_class: Iri,
    pub shapes: Vec<PropertyShape>,
}

impl Template {
    /// Every shape, parents before their sub-shapes, in template order.
    pub fn all_shapes(&self) -> impl Iterator<Item = &PropertyShape> {
        self.shapes
            .iter()
            .flat_map(|s| std::iter::once(s).chain(s.sub_shapes.iter()))
    }

    pub fn shape_for(&self, property: &Iri) -> Option<&PropertyShape> {
        self.all_shapes().find(|s| s.property == *property)
    }

    /// Position of a property in template order, if constrained.
    pub fn position(&self, property: &Iri) -> Option<usize> {
        self.all_shapes().position(|s| s.property == *property)
    }
}

struct ShapeVocabulary {
    shape_class: Iri,
    template_shape: Iri,
    target_class: Iri,
    shape_property: Iri,
    min_count: Iri,
    max_count: Iri,
    range_class: Iri,
    range_datatype: Iri,
    sub_shape: Iri,
}

impl ShapeVocabulary {
    fn ensure(store: &mut Store) -> Result<Self, GraphError> {
        Ok(ShapeVocabulary {
            shape_class: ensure_class(store, SHAPE_CLASS_LABEL)?,
            template_shape: ensure_property(store, "template shape")?,
            target_class: ensure_property(store, "target class")?,
            shape_property: ensure_property(store, "shape property")?,
            min_count: ensure_property(store, "min count")?,
            max_count: ensure_property(store, "max count")?,
            range_class: ensure_property(store, "range class")?,
            range_datatype: ensure_property(store, "range datatype")?,
            sub_shape: ensure_property(store, "sub shape")?,
        })
    }
}

fn build_shape(
    store: &mut Store,
    vocab: &ShapeVocabulary,
    spec: &PropertySpec,
    min_count: u32,
) -> Result<PropertyShape, GraphError> {
    let label = format!("{TEMPLATE_LABEL}: {}", spec.label);
    let iri = ensure_instance(store, EntityKind::Resource, &vocab.shape_class, &label)?;
    let range = match &spec.range {
        ValueRange::Controlled { class, .. } => ShapeRange::Controlled(class.clone()),
        ValueRange::Decimal => ShapeRange::Datatype(Datatype::Decimal),
        ValueRange::Integer => ShapeRange::Datatype(Datatype::Integer),
        ValueRange::String => ShapeRange::Datatype(Datatype::String),
    };
    store.add_statement(&iri, &vocab.shape_property, spec.iri.clone())?;
    store.add_statement(&iri, &vocab.min_count, Literal::integer(min_count.into()))?;
    store.add_statement(&iri, &vocab.max_count, Literal::integer(1))?;
    match &range {
        ShapeRange::Controlled(class) => {
            store.add_statement(&iri, &vocab.range_class, class.clone())?;
        }
        ShapeRange::Datatype(dt) => {
            store.add_statement(&iri, &vocab.range_datatype, Literal::string(dt.name()))?;
        }
    }
    let mut sub_shapes = Vec::with_capacity(spec.sub_properties.len());
    for sub in &spec.sub_properties {
        let shape = build_shape(store, vocab, sub, 0)?;
        store.add_statement(&iri, &vocab.sub_shape, shape.iri.clone())?;
        sub_shapes.push(shape);
    }
    Ok(PropertyShape {
        iri,
        property: spec.iri.clone(),
        label: spec.label.clone(),
        range,
        min_count,
        max_count: Some(1),
        sub_shapes,
    })
}

/// Defines the rTMS dose template: one shape per dose property in table
/// order. Only the stimulation type is required; every shape admits at
/// most one value. Defining it again returns the same template.
pub fn define_rtms_template(
    store: &mut Store,
    manifest: &VocabularyManifest,
) -> Result<Template, TemplateError> {
    let vocab = ShapeVocabulary::ensure(store)?;
    let target_class = ensure_class(store, TARGET_CLASS_LABEL)?;
    let existing = store
        .find_entities(EntityKind::Template, TEMPLATE_LABEL)
        .next()
        .map(|e| e.iri.clone());
    let iri = match existing {
        Some(iri) => iri,
        None => store.mint_entity(EntityKind::Template, TEMPLATE_LABEL, None)?,
    };
    store.add_statement(&iri, &vocab.target_class, target_class.clone())?;
    let mut shapes = Vec::with_capacity(manifest.properties.len());
    for spec in &manifest.properties {
        let min_count = u32::from(spec.label == TYPE_OF_RTMS);
        let shape = build_shape(store, &vocab, spec, min_count)?;
        store.add_statement(&iri, &vocab.template_shape, shape.iri.clone())?;
        shapes.push(shape);
    }
    Ok(Template {
        iri,
        label: TEMPLATE_LABEL.to_string(),
        target_class,
        shapes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ViolationCode {
    MissingRequired,
    NotInVocabulary,
    WrongDatatype,
    CardinalityExceeded,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Label of the violated shape.
    pub shape: Option<String>,
    pub property: Option<Iri>,
    pub code: ViolationCode,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Info {
    pub code: &'static str,
    pub property: Iri,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub contribution: Iri,
    pub violations: Vec<Violation>,
    pub infos: Vec<Info>,
}

impl ValidationReport {
    pub fn conforms(&self) -> bool {
        self.violations.is_empty()
    }

    /// `LEVEL\tCODE\tshape_label\tdetail`, one line per finding.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.violations {
            let _ = writeln!(
                out,
                "ERROR\t{}\t{}\t{}",
                v.code,
                escape_field(v.shape.as_deref().unwrap_or("-")),
                escape_field(&v.detail)
            );
        }
        for i in &self.infos {
            let _ = writeln!(out, "INFO\t{}\t-\t{}", i.code, escape_field(&i.detail));
        }
        out
    }
}

fn escape_field(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\t', "\\t")
        .replace('\n', "\\n")
}

pub(crate) fn render_value(store: &Store, term: &Term) -> String {
    match term {
        Term::Iri(iri) => store.label(iri).unwrap_or(iri.as_str()).to_string(),
        Term::Literal(lit) => lit.lexical().to_string(),
    }
}

fn check_value(
    store: &Store,
    shape: &PropertyShape,
    value: &Term,
) -> Option<(ViolationCode, String)> {
    let shown = render_value(store, value);
    match &shape.range {
        ShapeRange::Controlled(class) => match value {
            Term::Iri(iri) if store.has_type(iri, class) => None,
            _ => Some((
                ViolationCode::NotInVocabulary,
                format!("value {shown:?} is not a term of {}", shape.label),
            )),
        },
        ShapeRange::Datatype(expected) => {
            let ok = match value {
                Term::Literal(lit) => match expected {
                    Datatype::Decimal => lit.is_numeric(),
                    other => lit.datatype() == *other,
                },
                Term::Iri(_) => false,
            };
            (!ok).then(|| {
                (
                    ViolationCode::WrongDatatype,
                    format!("value {shown:?} of {} is not a {expected}", shape.label),
                )
            })
        }
    }
}

/// Validates the outgoing statements of a contribution against a template.
/// Violations are ordered by shape order, then by code.
pub fn validate(
    store: &Store,
    contribution: &Iri,
    template: &Template,
) -> Result<ValidationReport, TemplateError> {
    if store.entity(contribution).is_none() {
        return Err(GraphError::UnknownEntity(contribution.to_string()).into());
    }
    let mut violations = Vec::new();
    for shape in template.all_shapes() {
        let values = store.objects(contribution, &shape.property);
        let mut found: Vec<Violation> = Vec::new();
        let mut push = |code, detail| {
            found.push(Violation {
                shape: Some(shape.label.clone()),
                property: Some(shape.property.clone()),
                code,
                detail,
            })
        };
        if values.len() < shape.min_count as usize {
            push(
                ViolationCode::MissingRequired,
                format!(
                    "{} requires at least {} value(s), found {}",
                    shape.label,
                    shape.min_count,
                    values.len()
                ),
            );
        }
        for value in &values {
            if let Some((code, detail)) = check_value(store, shape, value) {
                push(code, detail);
            }
        }
        if let Some(max) = shape.max_count {
            if values.len() > max as usize {
                push(
                    ViolationCode::CardinalityExceeded,
                    format!(
                        "{} admits at most {max} value(s), found {}",
                        shape.label,
                        values.len()
                    ),
                );
            }
        }
        found.sort_by_key(|v| v.code);
        violations.extend(found);
    }

    let constrained: HashSet<&Iri> = template.all_shapes().map(|s| &s.property).collect();
    let mut reported = HashSet::new();
    let mut infos = Vec::new();
    for st in store.statements_matching(Some(contribution), None, None) {
        if st.predicate == *store.type_predicate() || constrained.contains(&st.predicate) {
            continue;
        }
        if reported.insert(st.predicate.clone()) {
            let label = store.label(&st.predicate).unwrap_or(st.predicate.as_str());
            infos.push(Info {
                code: "UnknownExtraProperty",
                property: st.predicate.clone(),
                detail: format!("{label} is not part of {}", template.label),
            });
        }
    }
    Ok(ValidationReport {
        contribution: contribution.clone(),
        violations,
        infos,
    })
}
