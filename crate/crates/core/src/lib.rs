//! Semantic publishing of rTMS dose studies as a FAIR knowledge graph.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] – triple store with an entity registry minting dereferenceable IRIs
//! * [`vocabulary`] – the seeded rTMS dose vocabulary and controlled-term lookup
//! * [`template`] – property shapes and contribution validation
//! * [`ingest`] – CSV parsing, synthetic corpora and contribution materialisation
//! * [`rdf`] – N-Triples parsing/serialisation, Turtle output and snapshots
//! * [`query`] – a conjunctive SPARQL `SELECT` subset
//! * [`comparison`] – comparison tables, chunking and versioned publication
//! * [`fair`] – FAIR audit and the HTTP dereferencing service
//! * [`cli`] – the command-line workflow

pub mod cli;
pub mod comparison;
pub mod fair;
pub mod graph;
pub mod ingest;
pub mod query;
pub mod rdf;
pub mod template;
pub mod vocabulary;
