//! Triple store, entity registry and the RDF value model.

pub mod numeric;
mod store;
mod term;

pub use store::{
    parse_local_id, Entity, EntityDescription, EntityKind, GraphError, SharedStore, Statement,
    Store, Triple, DEFAULT_NAMESPACE,
};
pub use term::{
    is_language_tag, Datatype, Iri, Literal, Term, TermError, OWL_SAME_AS, RDFS_LABEL, RDF_TYPE,
    XSD,
};
