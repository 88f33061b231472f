//! FAIR audit of a store and its publications, plus the HTTP service that
//! makes every minted IRI dereferenceable.

mod service;

use serde::Serialize;

use crate::comparison::PublicationRegistry;
use crate::graph::{parse_local_id, Store};
use crate::rdf::{parse_ntriples, serialize, SerializationOptions};

pub use service::{
    negotiate, router, serve, Representation, ServiceConfig, ServiceError, ServiceHandle, Snapshot,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub pass: bool,
    pub evidence: Vec<String>,
}

impl Check {
    fn new(pass: bool, evidence: Vec<String>) -> Self {
        debug_assert!(!evidence.is_empty());
        Check { pass, evidence }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FairReport {
    pub findable: Check,
    pub accessible: Check,
    pub interoperable: Check,
    pub reusable: Check,
}

impl FairReport {
    pub fn all_pass(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.pass)
    }

    pub fn checks(&self) -> [(&'static str, &Check); 4] {
        [
            ("findable", &self.findable),
            ("accessible", &self.accessible),
            ("interoperable", &self.interoperable),
            ("reusable", &self.reusable),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, check) in self.checks() {
            out.push_str(&format!(
                "{name}\t{}\n",
                if check.pass { "PASS" } else { "FAIL" }
            ));
            for e in &check.evidence {
                out.push_str(&format!("  - {e}\n"));
            }
        }
        out
    }
}

fn findable(registry: &PublicationRegistry) -> Check {
    if registry.is_empty() {
        return Check::new(false, vec!["no publications".into()]);
    }
    let mut pass = true;
    let evidence = registry
        .records()
        .iter()
        .map(|r| {
            let mut missing = Vec::new();
            if r.id.trim().is_empty() {
                missing.push("persistent id");
            }
            if r.metadata.title.trim().is_empty() {
                missing.push("title");
            }
            if r.metadata.creator.trim().is_empty() {
                missing.push("creator");
            }
            if missing.is_empty() {
                format!(
                    "{} (v{}): persistent id, title and creator present",
                    r.id, r.version
                )
            } else {
                pass = false;
                format!("{:?}: missing {}", r.id, missing.join(", "))
            }
        })
        .collect();
    Check::new(pass, evidence)
}

fn accessible(store: &Store, config: &ServiceConfig) -> Check {
    let minted: Vec<_> = store.minted_entities().collect();
    let unrouted: Vec<String> = minted
        .iter()
        .filter(|e| {
            let expected = store.iri_for(e.kind, &e.local_id).ok();
            let id_ok = parse_local_id(&e.local_id).is_some_and(|(k, _)| k == e.kind);
            !id_ok || expected.as_ref() != Some(&e.iri)
        })
        .map(|e| e.iri.to_string())
        .collect();
    let mut evidence = vec![format!(
        "{} of {} minted IRIs resolve through /{{resource,property,class,template}}/{{id}} under {}",
        minted.len() - unrouted.len(),
        minted.len(),
        store.namespace()
    )];
    evidence.extend(unrouted.iter().map(|iri| format!("no route serves {iri}")));
    evidence.push(if config.dump_enabled {
        "N-Triples dump served at /rdf/dump".to_string()
    } else {
        "N-Triples dump disabled".to_string()
    });
    Check::new(unrouted.is_empty() && config.dump_enabled, evidence)
}

fn interoperable(store: &Store) -> Check {
    let dump = serialize(store, &SerializationOptions::ntriples());
    let mut evidence = Vec::new();
    let export_ok = match parse_ntriples(&dump) {
        Ok(triples) => {
            evidence.push(format!(
                "N-Triples export of {} triples re-parses cleanly",
                triples.len()
            ));
            true
        }
        Err(e) => {
            evidence.push(format!("N-Triples export does not re-parse: {e}"));
            false
        }
    };
    let links = store.statements_matching(None, Some(store.same_as_predicate()), None);
    if links.is_empty() {
        evidence.push("no same-as links to external ontologies".into());
    } else {
        evidence.push(format!(
            "{} same-as link(s) to external ontologies",
            links.len()
        ));
    }
    Check::new(export_ok && !links.is_empty(), evidence)
}

fn reusable(registry: &PublicationRegistry) -> Check {
    if registry.is_empty() {
        return Check::new(true, vec!["no publications to license".into()]);
    }
    let mut pass = true;
    let evidence = registry
        .records()
        .iter()
        .map(|r| {
            let license = r
                .metadata
                .license
                .as_deref()
                .filter(|l| !l.trim().is_empty());
            match (license, r.published_at) {
                (Some(l), Some(at)) => {
                    format!("{}: license {l}, published {}", r.id, at.to_rfc3339())
                }
                (l, at) => {
                    pass = false;
                    let mut missing = Vec::new();
                    if l.is_none() {
                        missing.push("license tag");
                    }
                    if at.is_none() {
                        missing.push("creation timestamp");
                    }
                    format!("{}: missing {}", r.id, missing.join(", "))
                }
            }
        })
        .collect();
    Check::new(pass, evidence)
}

/// Audits the store and registry as served with the default configuration.
pub fn fair_report(store: &Store, registry: &PublicationRegistry) -> FairReport {
    fair_report_with(store, registry, &ServiceConfig::default())
}

pub fn fair_report_with(
    store: &Store,
    registry: &PublicationRegistry,
    config: &ServiceConfig,
) -> FairReport {
    FairReport {
        findable: findable(registry),
        accessible: accessible(store, config),
        interoperable: interoperable(store),
        reusable: reusable(registry),
    }
}
