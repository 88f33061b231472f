mod common;

use std::collections::BTreeMap;

use nibs_kg::graph::{Literal, Term};
use nibs_kg::ingest::{
    generate_synthetic_corpus, ingest_corpus, record_to_contribution, StudyRecord,
};
use nibs_kg::template::{validate, ViolationCode};
use nibs_kg::vocabulary::{RangeDef, TermLookup, RTMS_PROPERTIES};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

use common::{ingested, rng, seeded};

/// Lower-case and collapse runs of space, hyphen and underscore.
fn normalize_by_hand(label: &str) -> String {
    let mut out = String::new();
    let mut in_sep = false;
    for c in label.chars() {
        if matches!(c, ' ' | '-' | '_') {
            if !in_sep {
                out.push(' ');
            }
            in_sep = true;
        } else {
            out.extend(c.to_lowercase());
            in_sep = false;
        }
    }
    out.trim().to_string()
}

#[test]
fn coil_model_normalization_collides_once() {
    let coil_model = RTMS_PROPERTIES
        .iter()
        .find(|p| p.label == "Coil Model")
        .unwrap();
    let RangeDef::Controlled(terms) = coil_model.range else {
        panic!("coil model is controlled")
    };
    assert_eq!(terms.len(), 27);
    let mut groups: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for t in terms {
        groups
            .entry(normalize_by_hand(t.label))
            .or_default()
            .push(t.label);
    }
    let collisions: Vec<_> = groups.values().filter(|g| g.len() > 1).collect();
    assert_eq!(collisions, [&vec!["Cool B65", "cool-B65"]]);

    let s = seeded();
    let prop = s.prop("Coil Model");
    match s.manifest.lookup_term(&prop, "cool b65").unwrap() {
        TermLookup::Ambiguous(c) => {
            let mut labels: Vec<&str> = c.iter().map(|t| t.label.as_str()).collect();
            labels.sort();
            assert_eq!(labels, ["Cool B65", "cool-B65"]);
        }
        other => panic!("{other:?}"),
    }
    // Exact spelling always wins.
    assert!(matches!(
        s.manifest.lookup_term(&prop, "cool-B65").unwrap(),
        TermLookup::Match(t) if t.label == "cool-B65"
    ));
}

#[test]
fn itbs_f8_contribution_conforms() {
    let mut s = seeded();
    let mut record = StudyRecord {
        title: "A".into(),
        ..Default::default()
    };
    record
        .values
        .insert("Type of rTMS".into(), vec!["iTBS".into()]);
    record.values.insert("Coil Shape".into(), vec!["F8".into()]);
    let (c, report) =
        record_to_contribution(&mut s.store, &s.manifest, &s.template, &record).unwrap();
    assert!(report.violations.is_empty(), "{}", report.to_text());
    assert_eq!(c.dose_statements.len(), 2);
}

#[test]
fn example_row_has_six_dose_statements() {
    let mut s = seeded();
    let mut record = StudyRecord {
        title: "Example".into(),
        ..Default::default()
    };
    for (k, v) in [
        ("Type of rTMS", "cTBS"),
        ("Intrabust Frequency", "50"),
        ("Stimulation Intensity Selection Approach", "AMT"),
        ("Percent of Stimulation Intensity (Min value)", "70"),
        ("Percent of Stimulation Intensity (Max value)", "70"),
        ("Coil Shape", "F8"),
    ] {
        record.values.insert(k.into(), vec![v.into()]);
    }
    let before = s.store.len();
    let (c, report) =
        record_to_contribution(&mut s.store, &s.manifest, &s.template, &record).unwrap();
    assert!(report.violations.is_empty());
    // Enumerated by hand: 6 dose values; the contribution's type; the paper's
    // type, title and has-contribution link.
    assert_eq!(c.dose_statements.len(), 6);
    assert_eq!(s.store.len() - before, 6 + 1 + 3);
    assert_eq!(c.statements.len(), s.store.len() - before);
    let objects = |label: &str| s.store.objects(&c.iri, &s.prop(label));
    assert_eq!(
        objects("Type of rTMS"),
        [Term::Iri(s.term("Type of rTMS", "cTBS"))]
    );
    assert_eq!(
        objects("Intrabust Frequency"),
        [Term::Literal(Literal::decimal("50").unwrap())]
    );
}

#[test]
fn synthetic_corpus_conforms_by_construction() {
    let (s, summary) = ingested(1, 600);
    assert_eq!(
        (summary.total, summary.conforming, summary.with_violations),
        (600, 600, 0)
    );
    for c in &summary.contributions {
        assert!(validate(&s.store, c, &s.template).unwrap().conforms());
    }
}

fn mutate_record(record: &mut StudyRecord, which: usize) -> ViolationCode {
    match which {
        0 => {
            record.values.shift_remove("Type of rTMS");
            ViolationCode::MissingRequired
        }
        1 => {
            record
                .values
                .insert("Coil Shape".into(), vec!["Z99".into()]);
            ViolationCode::NotInVocabulary
        }
        _ => {
            record.values.insert("Coil Size".into(), vec!["big".into()]);
            ViolationCode::WrongDatatype
        }
    }
}

#[test]
fn three_mutated_rows_of_ten() {
    let mut s = seeded();
    let mut records = generate_synthetic_corpus(9, 10);
    let codes: Vec<_> = [2, 5, 7]
        .iter()
        .enumerate()
        .map(|(k, &i)| mutate_record(&mut records[i], k))
        .collect();
    let summary = ingest_corpus(&mut s.store, &s.manifest, &s.template, &records).unwrap();
    assert_eq!(summary.with_violations, 3);
    assert_eq!(summary.conforming, 7);
    let got: Vec<ViolationCode> = summary
        .reports
        .iter()
        .map(|r| {
            assert_eq!(r.violations.len(), 1, "{}", r.to_text());
            r.violations[0].code
        })
        .collect();
    assert_eq!(got, codes);
    assert!(summary
        .unresolved_tokens
        .contains_key(&("Coil Shape".to_string(), "Z99".to_string())));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Each independent graph-level mutation adds exactly one violation
    /// with the expected code.
    #[test]
    fn mutations_are_counted_exactly(seed in any::<u64>(), k in 1usize..=3) {
        let (mut s, summary) = ingested(seed, 5);
        let mut r = rng(seed);
        let c = summary.contributions.choose(&mut r).unwrap().clone();
        let shapes: Vec<_> = s.template.all_shapes().cloned().collect();
        let picked: Vec<_> = shapes.choose_multiple(&mut r, k).cloned().collect();
        let mut expected = Vec::new();
        for shape in &picked {
            let values = s.store.objects(&c, &shape.property);
            if let Some(v) = values.first().filter(|_| r.random_bool(0.5)) {
                s.store.remove_statement(&c, &shape.property, v);
                s.store.add_statement(&c, &shape.property, Literal::string("??")).unwrap();
                let code = match shape.range {
                    nibs_kg::template::ShapeRange::Controlled(_) => ViolationCode::NotInVocabulary,
                    nibs_kg::template::ShapeRange::Datatype(_) => ViolationCode::WrongDatatype,
                };
                expected.push((shape.label.clone(), code));
            } else if !values.is_empty() && shape.required() {
                for v in &values {
                    s.store.remove_statement(&c, &shape.property, v);
                }
                expected.push((shape.label.clone(), ViolationCode::MissingRequired));
            } else {
                // Two fresh valid values push any shape past max 1.
                let fresh: Vec<Term> = match &shape.range {
                    nibs_kg::template::ShapeRange::Controlled(class) => {
                        s.store.instances_of(class).into_iter().map(Term::Iri).collect()
                    }
                    _ => (0..3).map(|i| Literal::integer(1000 + i).into()).collect(),
                };
                let missing = 2usize.saturating_sub(values.len());
                for v in fresh.into_iter().filter(|v| !values.contains(v)).take(missing) {
                    s.store.add_statement(&c, &shape.property, v).unwrap();
                }
                expected.push((shape.label.clone(), ViolationCode::CardinalityExceeded));
            }
        }
        let report = validate(&s.store, &c, &s.template).unwrap();
        let mut got: Vec<_> = report.violations.iter().map(|v| (v.shape.clone().unwrap(), v.code)).collect();
        got.sort();
        expected.sort();
        prop_assert_eq!(got, expected);
    }
}
