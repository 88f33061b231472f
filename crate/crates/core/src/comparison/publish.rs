//! Publication registry: frozen comparison snapshots under pseudo-DOIs.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ComparisonError, ComparisonTable};

/// Deliberately unregistered DOI prefix; identifiers are
/// `10.99999/nibs.cmp.<n>`.
pub const DOI_PREFIX: &str = "10.99999/nibs.cmp.";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PublicationMetadata {
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub creator: String,
    /// License tag, e.g. `CC-BY-4.0`.
    #[serde(default)]
    pub license: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub id: String,
    pub version: u32,
    pub predecessor: Option<String>,
    pub metadata: PublicationMetadata,
    #[serde(default)]
    pub published_at: Option<DateTime<Utc>>,
    pub snapshot: ComparisonTable,
}

/// Ordered list of publication records, persisted as a JSON array.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PublicationRegistry {
    records: Vec<PublicationRecord>,
}

fn counter_of(id: &str) -> Option<u64> {
    id.strip_prefix(DOI_PREFIX)?.parse().ok()
}

impl PublicationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<PublicationRecord>) -> Self {
        PublicationRegistry { records }
    }

    pub fn records(&self) -> &[PublicationRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [PublicationRecord] {
        &mut self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PublicationRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    fn next_id(&self) -> String {
        let n = self
            .records
            .iter()
            .filter_map(|r| counter_of(&r.id))
            .max()
            .unwrap_or(0);
        format!("{DOI_PREFIX}{}", n + 1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records).expect("records serialize")
    }

    /// Reads a registry file; a missing file is an empty registry.
    pub fn load(path: &Path) -> Result<Self, ComparisonError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(source) => {
                return Err(ComparisonError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        let records = serde_json::from_str(&text).map_err(|source| ComparisonError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_records(records))
    }

    pub fn save(&self, path: &Path) -> Result<(), ComparisonError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|source| ComparisonError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Freezes a table into the registry.
///
/// Publishing the same content with the same predecessor returns the
/// existing record. With a predecessor, the new record's version is one
/// above the predecessor's.
pub fn publish_comparison(
    registry: &mut PublicationRegistry,
    table: &ComparisonTable,
    metadata: PublicationMetadata,
    predecessor: Option<&str>,
) -> Result<PublicationRecord, ComparisonError> {
    if table.contributions.is_empty() {
        return Err(ComparisonError::EmptyTable);
    }
    let version = match predecessor {
        None => 1,
        Some(id) => {
            registry
                .get(id)
                .ok_or_else(|| ComparisonError::UnknownPublication(id.to_string()))?
                .version
                + 1
        }
    };
    if let Some(existing) = registry
        .records
        .iter()
        .find(|r| r.snapshot.same_content(table) && r.predecessor.as_deref() == predecessor)
    {
        return Ok(existing.clone());
    }
    let id = registry.next_id();
    let mut snapshot = table.clone();
    snapshot.id = Some(id.clone());
    snapshot.version = Some(version);
    let record = PublicationRecord {
        id,
        version,
        predecessor: predecessor.map(str::to_string),
        metadata,
        published_at: Some(Utc::now()),
        snapshot,
    };
    registry.records.push(record.clone());
    Ok(record)
}
