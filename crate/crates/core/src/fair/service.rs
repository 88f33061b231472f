//! Read-only HTTP service over an immutable store snapshot.
//!
//! Entity routes negotiate between a JSON landing document (the default)
//! and N-Triples. The snapshot is swapped atomically on [`ServiceHandle::reload`].

use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use parking_lot::RwLock;
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::comparison::PublicationRegistry;
use crate::graph::{EntityKind, Iri, Store, Term};
use crate::query::run_query;
use crate::rdf::{serialize, write_ntriples, SerializationOptions};

use super::{fair_report_with, FairReport};

const JSON: &str = "application/json";
const NTRIPLES: &str = "application/n-triples";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure {
        addr: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceConfig {
    pub dump_enabled: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { dump_enabled: true }
    }
}

/// Everything a request may read, frozen at load time.
#[derive(Debug)]
pub struct Snapshot {
    pub store: Store,
    pub registry: PublicationRegistry,
    pub config: ServiceConfig,
    dump: String,
    report: FairReport,
}

impl Snapshot {
    pub fn new(store: Store, registry: PublicationRegistry, config: ServiceConfig) -> Self {
        let dump = serialize(&store, &SerializationOptions::ntriples());
        let report = fair_report_with(&store, &registry, &config);
        Snapshot {
            store,
            registry,
            config,
            dump,
            report,
        }
    }

    pub fn dump(&self) -> &str {
        &self.dump
    }
}

type Shared = Arc<RwLock<Arc<Snapshot>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Json,
    NTriples,
}

/// Picks a representation from an `Accept` header. Media-type parameters
/// are ignored; the first supported entry wins; absent or `*/*` means JSON.
pub fn negotiate(accept: Option<&str>) -> Option<Representation> {
    let Some(accept) = accept.map(str::trim).filter(|a| !a.is_empty()) else {
        return Some(Representation::Json);
    };
    accept.split(',').find_map(|entry| {
        let media = entry.split(';').next().unwrap_or("").trim();
        match media.to_ascii_lowercase().as_str() {
            JSON | "*/*" => Some(Representation::Json),
            NTRIPLES => Some(Representation::NTriples),
            _ => None,
        }
    })
}

fn with_type(status: StatusCode, content_type: &'static str, body: String) -> Response {
    let mut resp = (status, body).into_response();
    resp.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    resp
}

fn json_response(status: StatusCode, value: &Value) -> Response {
    let body = serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n";
    with_type(status, JSON, body)
}

fn not_found(what: &str) -> Response {
    with_type(
        StatusCode::NOT_FOUND,
        "text/plain; charset=utf-8",
        format!("not found: {what}\n"),
    )
}

fn not_acceptable() -> Response {
    with_type(
        StatusCode::NOT_ACCEPTABLE,
        "text/plain; charset=utf-8",
        format!("supported representations: {JSON}, {NTRIPLES}\n"),
    )
}

fn representation(headers: &HeaderMap) -> Option<Representation> {
    negotiate(headers.get(header::ACCEPT).and_then(|v| v.to_str().ok()))
}

fn term_json(store: &Store, term: &Term) -> Value {
    match term {
        Term::Iri(iri) => {
            let mut v = json!({ "type": "iri", "value": iri.as_str() });
            if let Some(label) = store.label(iri) {
                v["label"] = label.into();
            }
            v
        }
        Term::Literal(lit) => {
            let mut v = json!({
                "type": "literal",
                "value": lit.lexical(),
                "datatype": lit.datatype().iri(),
            });
            if let Some(lang) = lit.lang() {
                v["lang"] = lang.into();
            }
            v
        }
    }
}

fn landing_page(store: &Store, iri: &Iri) -> Value {
    let desc = store.resolve(iri).expect("entity exists");
    let classes: Vec<Value> = desc
        .classes
        .iter()
        .map(|c| json!({ "iri": c.as_str(), "label": store.label(c) }))
        .collect();
    let statements: Vec<Value> = desc
        .statements
        .iter()
        .map(|st| {
            json!({
                "predicate": st.predicate.as_str(),
                "predicate_label": store.label(&st.predicate),
                "object": term_json(store, &st.object),
            })
        })
        .collect();
    json!({
        "id": desc.iri.as_str(),
        "local_id": desc.local_id,
        "kind": desc.kind.name(),
        "label": desc.label,
        "classes": classes,
        "statements": statements,
        "links": {
            "rdf": { "href": desc.iri.as_str(), "type": NTRIPLES },
            "dump": { "href": "/rdf/dump", "type": NTRIPLES },
        },
    })
}

fn outgoing_ntriples(store: &Store, subjects: &[Iri]) -> String {
    let triples: Vec<_> = subjects
        .iter()
        .flat_map(|s| store.statements_matching(Some(s), None, None))
        .map(|st| st.triple())
        .collect();
    write_ntriples(&triples, true)
}

fn current(state: &Shared) -> Arc<Snapshot> {
    state.read().clone()
}

async fn entity(kind: EntityKind, state: Shared, id: String, headers: HeaderMap) -> Response {
    let Some(repr) = representation(&headers) else {
        return not_acceptable();
    };
    let snap = current(&state);
    let store = &snap.store;
    let Some(entity) = store
        .entity_by_local_id(&id)
        .filter(|e| e.kind == kind && !e.external)
    else {
        return not_found(&format!("/{}/{id}", kind.segment()));
    };
    match repr {
        Representation::Json => json_response(StatusCode::OK, &landing_page(store, &entity.iri)),
        Representation::NTriples => with_type(
            StatusCode::OK,
            NTRIPLES,
            outgoing_ntriples(store, std::slice::from_ref(&entity.iri)),
        ),
    }
}

async fn comparison(
    State(state): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Response {
    let Some(repr) = representation(&headers) else {
        return not_acceptable();
    };
    let snap = current(&state);
    let Some(record) = snap.registry.get(&id) else {
        return not_found(&format!("/comparison/{id}"));
    };
    match repr {
        Representation::Json => json_response(
            StatusCode::OK,
            &serde_json::to_value(record).expect("records serialize"),
        ),
        Representation::NTriples => {
            let contributions: Vec<Iri> = record
                .snapshot
                .contributions
                .iter()
                .map(|c| c.contribution.clone())
                .collect();
            with_type(
                StatusCode::OK,
                NTRIPLES,
                outgoing_ntriples(&snap.store, &contributions),
            )
        }
    }
}

async fn dump(State(state): State<Shared>) -> Response {
    let snap = current(&state);
    if !snap.config.dump_enabled {
        return not_found("/rdf/dump");
    }
    with_type(StatusCode::OK, NTRIPLES, snap.dump.clone())
}

async fn sparql(
    State(state): State<Shared>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let Some(text) = params.get("query") else {
        return with_type(
            StatusCode::BAD_REQUEST,
            "text/plain; charset=utf-8",
            "missing `query` parameter\n".into(),
        );
    };
    let snap = current(&state);
    match run_query(&snap.store, text) {
        Ok(table) => json_response(StatusCode::OK, &table.to_json_value()),
        Err(e) => with_type(
            StatusCode::BAD_REQUEST,
            "text/plain; charset=utf-8",
            format!("{e}\n"),
        ),
    }
}

async fn report(State(state): State<Shared>) -> Response {
    let snap = current(&state);
    json_response(
        StatusCode::OK,
        &serde_json::to_value(&snap.report).expect("reports serialize"),
    )
}

fn entity_route(kind: EntityKind) -> axum::routing::MethodRouter<Shared> {
    get(
        move |State(state): State<Shared>, Path(id): Path<String>, headers: HeaderMap| {
            entity(kind, state, id, headers)
        },
    )
}

/// The service's routes over a shared snapshot slot.
pub fn router(state: Arc<RwLock<Arc<Snapshot>>>) -> Router {
    let mut app = Router::new();
    for kind in EntityKind::ALL {
        app = app.route(&format!("/{}/{{id}}", kind.segment()), entity_route(kind));
    }
    app.route("/comparison/{*id}", get(comparison))
        .route("/rdf/dump", get(dump))
        .route("/sparql", get(sparql))
        .route("/fair/report", get(report))
        .with_state(state)
}

/// A running service. Dropping the handle leaves the server running until
/// its runtime shuts down; call [`ServiceHandle::shutdown`] to stop it.
pub struct ServiceHandle {
    addr: SocketAddr,
    state: Shared,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<io::Result<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://host:port` of the bound socket.
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Replaces the served snapshot; in-flight requests finish on the old one.
    pub fn reload(&self, store: Store, registry: PublicationRegistry) {
        let config = self.state.read().config;
        *self.state.write() = Arc::new(Snapshot::new(store, registry, config));
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        current(&self.state)
    }

    pub async fn shutdown(mut self) -> io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.unwrap_or_else(|e| Err(io::Error::other(e)))
    }

    /// Runs until the server stops.
    pub async fn wait(self) -> io::Result<()> {
        self.task.await.unwrap_or_else(|e| Err(io::Error::other(e)))
    }
}

/// Binds `addr` and starts serving on the current Tokio runtime.
pub async fn serve(
    store: Store,
    registry: PublicationRegistry,
    addr: &str,
    config: ServiceConfig,
) -> Result<ServiceHandle, ServiceError> {
    let bind_err = |source| ServiceError::BindFailure {
        addr: addr.to_string(),
        source,
    };
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(bind_err)?;
    let local = listener.local_addr().map_err(bind_err)?;
    let state: Shared = Arc::new(RwLock::new(Arc::new(Snapshot::new(
        store, registry, config,
    ))));
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(state.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(ServiceHandle {
        addr: local,
        state,
        shutdown: Some(tx),
        task,
    })
}
