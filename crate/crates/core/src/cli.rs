//! The `nibs-kg` command line.
//!
//! A store lives at an explicit base path `S`: `S.nt` (triples), `S.reg`
//! (entity registry) and `S.pub.json` (publications).
//!
//! Exit codes: 0 success, 1 completed with violations or failed checks,
//! 2 usage, parse or configuration error, 3 I/O error.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::comparison::{
    chunk_comparisons, contributions_in_store, export_comparison, publish_comparison,
    ComparisonError, ExportFormat, PropertyMode, PublicationMetadata, PublicationRegistry,
};
use crate::fair::{fair_report, serve, ServiceConfig};
use crate::graph::{GraphError, Iri, Store, DEFAULT_NAMESPACE};
use crate::ingest::{
    generate_synthetic_corpus, ingest_corpus, parse_csv, read_headers, write_csv, ColumnMapping,
    IngestError,
};
use crate::query::{execute, parse_query};
use crate::rdf::{
    read_snapshot, serialize, write_snapshot, SerializationOptions, SnapshotError, SnapshotPaths,
};
use crate::template::{define_rtms_template, validate, Template};
use crate::vocabulary::{same_as_link, seed_rtms_vocabulary, VocabularyError, VocabularyManifest};

/// Environment variable overriding the minting namespace of new stores.
pub const NAMESPACE_ENV: &str = "NIBS_KG_NAMESPACE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitStatus(pub u8);

impl ExitStatus {
    pub const SUCCESS: ExitStatus = ExitStatus(0);
    pub const VIOLATIONS: ExitStatus = ExitStatus(1);
    pub const USAGE: ExitStatus = ExitStatus(2);
    pub const IO: ExitStatus = ExitStatus(3);

    pub fn code(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nibs-kg",
    version,
    about = "Semantic publishing of rTMS dose studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct StoreArg {
    /// Store base path (files <S>.nt, <S>.reg, <S>.pub.json)
    #[arg(long, value_name = "S")]
    store: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RdfFormat {
    Nt,
    Ttl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ResultFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
    Md,
}

impl From<TableFormat> for ExportFormat {
    fn from(f: TableFormat) -> Self {
        match f {
            TableFormat::Csv => ExportFormat::Csv,
            TableFormat::Json => ExportFormat::Json,
            TableFormat::Md => ExportFormat::Markdown,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Union,
    Intersection,
}

impl From<Mode> for PropertyMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Union => PropertyMode::Union,
            Mode::Intersection => PropertyMode::Intersection,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create (or refresh) a store with the rTMS vocabulary and template
    Seed(StoreArg),
    /// Ingest a CSV study table
    Ingest {
        #[arg(long, value_name = "F")]
        csv: PathBuf,
        /// Column mapping file (`header = property label` lines); defaults
        /// to matching headers against property labels
        #[arg(long, value_name = "M")]
        map: Option<PathBuf>,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Validate contributions against the template
    Validate {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, value_name = "IRI")]
        contribution: Option<String>,
    },
    /// Serialize the store
    Export {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, value_enum, default_value = "nt")]
        format: RdfFormat,
    },
    /// Run a SELECT query
    Query {
        #[command(flatten)]
        store: StoreArg,
        #[arg(
            long,
            value_name = "Q",
            conflicts_with = "text",
            required_unless_present = "text"
        )]
        file: Option<PathBuf>,
        #[arg(long, value_name = "Q")]
        text: Option<String>,
        #[arg(long, value_enum, default_value = "csv")]
        out: ResultFormat,
    },
    /// Write chunked comparison tables
    Compare {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, default_value_t = 100)]
        chunk_size: usize,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
        #[arg(long, value_enum, default_value = "union")]
        mode: Mode,
    },
    /// Publish one comparison part under a persistent identifier
    Publish {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, value_name = "K")]
        part: usize,
        #[arg(long, value_name = "T")]
        title: String,
        #[arg(long, value_name = "L")]
        license: String,
        #[arg(long)]
        creator: Option<String>,
        #[arg(long, default_value = "")]
        description: String,
        /// Identifier of the publication this one supersedes
        #[arg(long, value_name = "ID")]
        predecessor: Option<String>,
        #[arg(long, default_value_t = 100)]
        chunk_size: usize,
        #[arg(long, value_enum, default_value = "union")]
        mode: Mode,
    },
    /// Write a seeded synthetic study table
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_name = "F")]
        out: PathBuf,
    },
    /// Serve the store over HTTP
    Serve {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, value_name = "A", default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Audit the store against the FAIR checks
    FairReport(StoreArg),
    /// Link a local term to an external ontology term
    SameAs {
        #[command(flatten)]
        store: StoreArg,
        /// Local IRI or local id (e.g. R12)
        #[arg(long, value_name = "IRI")]
        term: String,
        #[arg(long, value_name = "IRI")]
        external: String,
    },
}

/// A failed command: exit status plus message for the error stream.
struct Failure {
    status: ExitStatus,
    message: String,
}

impl Failure {
    fn usage(message: impl Display) -> Self {
        Failure {
            status: ExitStatus::USAGE,
            message: message.to_string(),
        }
    }

    fn io(message: impl Display) -> Self {
        Failure {
            status: ExitStatus::IO,
            message: message.to_string(),
        }
    }
}

impl From<SnapshotError> for Failure {
    fn from(e: SnapshotError) -> Self {
        match e {
            SnapshotError::Io { .. } => Failure::io(e),
            other => Failure::usage(format!("corrupt store: {other}")),
        }
    }
}

impl From<ComparisonError> for Failure {
    fn from(e: ComparisonError) -> Self {
        match e {
            ComparisonError::Io { .. } => Failure::io(e),
            other => Failure::usage(other),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure::usage(e)
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        Failure::usage(e)
    }
}

impl From<VocabularyError> for Failure {
    fn from(e: VocabularyError) -> Self {
        Failure::usage(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e)
    }
}

type CmdResult = Result<ExitStatus, Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn registry_path(store: &Path) -> PathBuf {
    let mut p = store.as_os_str().to_owned();
    p.push(".pub.json");
    PathBuf::from(p)
}

/// A loaded store with its vocabulary and template re-derived.
struct Workspace {
    paths: SnapshotPaths,
    store: Store,
    manifest: VocabularyManifest,
    template: Template,
}

impl Workspace {
    fn open(base: &Path) -> Result<Self, Failure> {
        let paths = SnapshotPaths::new(base);
        if !paths.exists() {
            return Err(Failure::io(format!(
                "no store at {} (run `nibs-kg seed --store {}` first)",
                base.display(),
                base.display()
            )));
        }
        let store = read_snapshot(&paths)?;
        Self::prepare(paths, store)
    }

    fn prepare(paths: SnapshotPaths, mut store: Store) -> Result<Self, Failure> {
        let manifest = seed_rtms_vocabulary(&mut store)?;
        let template = define_rtms_template(&mut store, &manifest).map_err(Failure::usage)?;
        Ok(Workspace {
            paths,
            store,
            manifest,
            template,
        })
    }

    fn save(&self) -> Result<(), Failure> {
        Ok(write_snapshot(&self.store, &self.paths)?)
    }
}

fn resolve_entity(store: &Store, raw: &str) -> Result<Iri, Failure> {
    let found = match store.entity_by_local_id(raw) {
        Some(e) => Some(e.iri.clone()),
        None => Iri::parse(raw)
            .ok()
            .filter(|iri| store.entity(iri).is_some()),
    };
    found.ok_or_else(|| Failure::usage(format!("unknown entity {raw}")))
}

fn cmd_seed(store: &StoreArg, out: &mut dyn Write) -> CmdResult {
    let paths = SnapshotPaths::new(&store.store);
    let base = if paths.exists() {
        read_snapshot(&paths)?
    } else {
        let ns = std::env::var(NAMESPACE_ENV).unwrap_or_else(|_| DEFAULT_NAMESPACE.to_string());
        Store::new(&ns).map_err(|e| Failure::usage(format!("{NAMESPACE_ENV}: {e}")))?
    };
    let ws = Workspace::prepare(paths, base)?;
    ws.save()?;
    writeln!(
        out,
        "seeded {}: {} properties, {} controlled terms, template {} with {} shapes",
        ws.store.namespace(),
        ws.manifest.properties.len(),
        ws.manifest.controlled_term_count(),
        ws.template.iri,
        ws.template.all_shapes().count()
    )?;
    Ok(ExitStatus::SUCCESS)
}

fn cmd_ingest(
    csv: &Path,
    map: Option<&Path>,
    store: &StoreArg,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let mut ws = Workspace::open(&store.store)?;
    let data = std::fs::read(csv).map_err(|e| Failure::io(format!("{}: {e}", csv.display())))?;
    let mapping = match map {
        Some(path) => ColumnMapping::parse(&read_file(path)?, &ws.manifest)?,
        None => {
            let headers = read_headers(data.as_slice())?;
            let (mapping, unmapped) =
                ColumnMapping::from_headers(headers.iter().map(String::as_str), &ws.manifest);
            for h in unmapped {
                writeln!(
                    err,
                    "warning: column {h:?} matches no property and is ignored"
                )?;
            }
            mapping
        }
    };
    let records = parse_csv(data.as_slice(), &mapping)?;
    let summary = ingest_corpus(&mut ws.store, &ws.manifest, &ws.template, &records)?;
    ws.save()?;

    writeln!(out, "records\t{}", summary.total)?;
    writeln!(out, "conforming\t{}", summary.conforming)?;
    writeln!(out, "with_violations\t{}", summary.with_violations)?;
    for ((property, token), n) in &summary.unresolved_tokens {
        writeln!(out, "unresolved\t{property}\t{token}\t{n}")?;
    }
    for report in &summary.reports {
        writeln!(out, "# {}", report.contribution)?;
        write!(out, "{}", report.to_text())?;
    }
    Ok(if summary.with_violations > 0 {
        ExitStatus::VIOLATIONS
    } else {
        ExitStatus::SUCCESS
    })
}

fn cmd_validate(store: &StoreArg, contribution: Option<&str>, out: &mut dyn Write) -> CmdResult {
    let ws = Workspace::open(&store.store)?;
    let targets = match contribution {
        Some(raw) => vec![resolve_entity(&ws.store, raw)?],
        None => contributions_in_store(&ws.store, &ws.template),
    };
    let mut failing = 0;
    for c in &targets {
        let report = validate(&ws.store, c, &ws.template).map_err(Failure::usage)?;
        if !report.conforms() {
            failing += 1;
        }
        if !report.violations.is_empty() || !report.infos.is_empty() {
            writeln!(out, "# {c}")?;
            write!(out, "{}", report.to_text())?;
        }
    }
    writeln!(
        out,
        "{} contribution(s), {failing} with violations",
        targets.len()
    )?;
    Ok(if failing > 0 {
        ExitStatus::VIOLATIONS
    } else {
        ExitStatus::SUCCESS
    })
}

fn cmd_export(store: &StoreArg, format: RdfFormat, out: &mut dyn Write) -> CmdResult {
    let store = read_snapshot(&SnapshotPaths::new(&store.store))?;
    let opts = match format {
        RdfFormat::Nt => SerializationOptions::ntriples(),
        RdfFormat::Ttl => SerializationOptions::turtle_for(&store),
    };
    out.write_all(serialize(&store, &opts).as_bytes())?;
    Ok(ExitStatus::SUCCESS)
}

fn cmd_query(
    store: &StoreArg,
    file: Option<&Path>,
    text: Option<&str>,
    format: ResultFormat,
    out: &mut dyn Write,
) -> CmdResult {
    let text = match (file, text) {
        (Some(path), _) => read_file(path)?,
        (None, Some(t)) => t.to_string(),
        (None, None) => return Err(Failure::usage("one of --file or --text is required")),
    };
    let query = parse_query(&text).map_err(Failure::usage)?;
    let store = read_snapshot(&SnapshotPaths::new(&store.store))?;
    let table = execute(&store, &query).map_err(Failure::usage)?;
    match format {
        ResultFormat::Csv => out.write_all(table.to_csv().as_bytes())?,
        ResultFormat::Json => writeln!(out, "{}", table.to_json())?,
    }
    Ok(ExitStatus::SUCCESS)
}

fn cmd_compare(
    store: &StoreArg,
    chunk_size: usize,
    dir: &Path,
    format: TableFormat,
    mode: Mode,
    out: &mut dyn Write,
) -> CmdResult {
    let ws = Workspace::open(&store.store)?;
    let contributions = contributions_in_store(&ws.store, &ws.template);
    let parts = chunk_comparisons(
        &ws.store,
        &ws.manifest,
        &ws.template,
        &contributions,
        chunk_size,
        mode.into(),
    )?;
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    let format = ExportFormat::from(format);
    for table in &parts {
        let part = table.part_index.expect("chunked tables are numbered");
        let path = dir.join(format!(
            "comparison-part-{}-of-{}.{}",
            part.k,
            part.n,
            format.extension()
        ));
        write_file(&path, export_comparison(table, format).as_bytes())?;
        writeln!(
            out,
            "{}\t{} contributions\t{} properties",
            path.display(),
            table.contributions.len(),
            table.rows.len()
        )?;
    }
    writeln!(out, "{} part(s)", parts.len())?;
    Ok(ExitStatus::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_publish(
    store: &StoreArg,
    part: usize,
    metadata: PublicationMetadata,
    predecessor: Option<&str>,
    chunk_size: usize,
    mode: Mode,
    out: &mut dyn Write,
) -> CmdResult {
    let ws = Workspace::open(&store.store)?;
    let contributions = contributions_in_store(&ws.store, &ws.template);
    let parts = chunk_comparisons(
        &ws.store,
        &ws.manifest,
        &ws.template,
        &contributions,
        chunk_size,
        mode.into(),
    )?;
    let table = part
        .checked_sub(1)
        .and_then(|i| parts.get(i))
        .ok_or_else(|| {
            Failure::usage(format!(
                "--part must be between 1 and {}, got {part}",
                parts.len()
            ))
        })?;
    let path = registry_path(&store.store);
    let mut registry = PublicationRegistry::load(&path)?;
    let before = registry.len();
    let record = publish_comparison(&mut registry, table, metadata, predecessor)?;
    if registry.len() != before {
        registry.save(&path)?;
    }
    writeln!(out, "{}\tversion {}", record.id, record.version)?;
    Ok(ExitStatus::SUCCESS)
}

fn cmd_synth(seed: u64, n: usize, path: &Path, out: &mut dyn Write) -> CmdResult {
    let records = generate_synthetic_corpus(seed, n);
    let mut buf = Vec::new();
    write_csv(&records, &mut buf).map_err(Failure::io)?;
    write_file(path, &buf)?;
    writeln!(out, "wrote {n} synthetic records to {}", path.display())?;
    Ok(ExitStatus::SUCCESS)
}

fn cmd_serve(store: &StoreArg, addr: &str, out: &mut dyn Write) -> CmdResult {
    let snapshot = read_snapshot(&SnapshotPaths::new(&store.store))?;
    let registry = PublicationRegistry::load(&registry_path(&store.store))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let handle = serve(snapshot, registry, addr, ServiceConfig::default())
            .await
            .map_err(Failure::io)?;
        writeln!(out, "serving on {}", handle.base_url())?;
        out.flush()?;
        handle.wait().await?;
        Ok(ExitStatus::SUCCESS)
    })
}

fn cmd_fair_report(store: &StoreArg, out: &mut dyn Write) -> CmdResult {
    let snapshot = read_snapshot(&SnapshotPaths::new(&store.store))?;
    let registry = PublicationRegistry::load(&registry_path(&store.store))?;
    let report = fair_report(&snapshot, &registry);
    write!(out, "{}", report.to_text())?;
    Ok(if report.all_pass() {
        ExitStatus::SUCCESS
    } else {
        ExitStatus::VIOLATIONS
    })
}

fn cmd_same_as(store: &StoreArg, term: &str, external: &str, out: &mut dyn Write) -> CmdResult {
    let paths = SnapshotPaths::new(&store.store);
    let mut snapshot = read_snapshot(&paths)?;
    let local = resolve_entity(&snapshot, term)?;
    same_as_link(&mut snapshot, &local, external)?;
    write_snapshot(&snapshot, &paths)?;
    writeln!(out, "{local} owl:sameAs {external}")?;
    Ok(ExitStatus::SUCCESS)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cli.command {
        Command::Seed(store) => cmd_seed(&store, out),
        Command::Ingest { csv, map, store } => cmd_ingest(&csv, map.as_deref(), &store, out, err),
        Command::Validate {
            store,
            contribution,
        } => cmd_validate(&store, contribution.as_deref(), out),
        Command::Export { store, format } => cmd_export(&store, format, out),
        Command::Query {
            store,
            file,
            text,
            out: format,
        } => cmd_query(&store, file.as_deref(), text.as_deref(), format, out),
        Command::Compare {
            store,
            chunk_size,
            out: dir,
            format,
            mode,
        } => cmd_compare(&store, chunk_size, &dir, format, mode, out),
        Command::Publish {
            store,
            part,
            title,
            license,
            creator,
            description,
            predecessor,
            chunk_size,
            mode,
        } => {
            let creator = creator
                .or_else(|| std::env::var("USER").ok())
                .unwrap_or_else(|| "unknown".to_string());
            let metadata = PublicationMetadata {
                title,
                description,
                creator,
                license: Some(license),
            };
            cmd_publish(
                &store,
                part,
                metadata,
                predecessor.as_deref(),
                chunk_size,
                mode,
                out,
            )
        }
        Command::Synth { seed, n, out: path } => cmd_synth(seed, n, &path, out),
        Command::Serve { store, addr } => cmd_serve(&store, &addr, out),
        Command::FairReport(store) => cmd_fair_report(&store, out),
        Command::SameAs {
            store,
            term,
            external,
        } => cmd_same_as(&store, &term, &external, out),
    }
}

/// Runs the command line given in `args` (program name first).
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    ExitStatus::SUCCESS
                }
                _ => {
                    let _ = write!(err, "{text}");
                    ExitStatus::USAGE
                }
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(status) => status,
        Err(failure) => {
            let _ = writeln!(err, "error: {}", failure.message);
            failure.status
        }
    }
}
