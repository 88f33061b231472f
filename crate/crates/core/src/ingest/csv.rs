//! CSV study tables and column-mapping files.

use std::io::{Read, Write};

use indexmap::IndexMap;

use crate::vocabulary::{self, normalize, VocabularyManifest, RTMS_PROPERTIES};

use super::{IngestError, StudyRecord};

/// Separator for several values in one cell.
pub const MULTI_VALUE_SEPARATOR: char = ';';

/// Where a CSV column goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnTarget {
    Title,
    Doi,
    Year,
    FirstAuthor,
    /// A dose property, by canonical label.
    Property(String),
}

impl ColumnTarget {
    fn metadata(label: &str) -> Option<Self> {
        let key = normalize(label);
        [
            (vocabulary::TITLE, ColumnTarget::Title),
            (vocabulary::DOI, ColumnTarget::Doi),
            (vocabulary::PUBLICATION_YEAR, ColumnTarget::Year),
            ("year", ColumnTarget::Year),
            (vocabulary::FIRST_AUTHOR, ColumnTarget::FirstAuthor),
        ]
        .into_iter()
        .find(|(l, _)| normalize(l) == key)
        .map(|(_, t)| t)
    }

    fn resolve(label: &str, manifest: &VocabularyManifest) -> Option<Self> {
        Self::metadata(label).or_else(|| {
            manifest
                .property_by_label(label)
                .map(|p| ColumnTarget::Property(p.label.clone()))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ColumnMapping {
    columns: IndexMap<String, ColumnTarget>,
}

impl ColumnMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, header: impl Into<String>, target: ColumnTarget) {
        self.columns.insert(header.into(), target);
    }

    pub fn target(&self, header: &str) -> Option<&ColumnTarget> {
        self.columns.get(header.trim())
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Parses `column_header = property_label` lines; `#` starts a comment.
    pub fn parse(text: &str, manifest: &VocabularyManifest) -> Result<Self, IngestError> {
        let mut mapping = ColumnMapping::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((header, label)) = line.split_once('=') else {
                return Err(IngestError::Mapping {
                    line: i + 1,
                    reason: "expected `column_header = property_label`".into(),
                });
            };
            let (header, label) = (header.trim(), label.trim());
            if header.is_empty() {
                return Err(IngestError::Mapping {
                    line: i + 1,
                    reason: "empty column header".into(),
                });
            }
            let target =
                ColumnTarget::resolve(label, manifest).ok_or_else(|| IngestError::Mapping {
                    line: i + 1,
                    reason: format!("unknown property {label:?}"),
                })?;
            mapping.insert(header, target);
        }
        Ok(mapping)
    }

    /// Maps every header that names a metadata field or dose property.
    /// Returns the mapping and the headers left unmapped.
    pub fn from_headers<'a>(
        headers: impl IntoIterator<Item = &'a str>,
        manifest: &VocabularyManifest,
    ) -> (Self, Vec<String>) {
        let mut mapping = ColumnMapping::new();
        let mut unmapped = Vec::new();
        for h in headers {
            match ColumnTarget::resolve(h, manifest) {
                Some(t) => mapping.insert(h.trim(), t),
                None => unmapped.push(h.to_string()),
            }
        }
        (mapping, unmapped)
    }
}

/// Header row of a CSV file without parsing the rest.
pub fn read_headers(input: impl Read) -> Result<Vec<String>, IngestError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers().map_err(|e| csv_error(1, e))?;
    Ok(headers.iter().map(str::to_string).collect())
}

fn csv_error(row: u64, e: ::csv::Error) -> IngestError {
    let row = e.position().map_or(row, |p| p.line());
    IngestError::MalformedCsv {
        row,
        reason: e.to_string(),
    }
}

/// Splits a cell on `;`, trimming tokens and dropping empty ones.
pub fn split_cell(cell: &str) -> Vec<String> {
    cell.split(MULTI_VALUE_SEPARATOR)
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses a CSV study table. Rows are numbered by line, the header being
/// line 1.
pub fn parse_csv(
    input: impl Read,
    mapping: &ColumnMapping,
) -> Result<Vec<StudyRecord>, IngestError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(input);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(1, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let targets: Vec<Option<&ColumnTarget>> = headers.iter().map(|h| mapping.target(h)).collect();
    if !targets
        .iter()
        .any(|t| matches!(t, Some(ColumnTarget::Title)))
    {
        return Err(IngestError::MissingTitleColumn);
    }

    let mut records = Vec::new();
    for result in reader.records() {
        let row = result.map_err(|e| csv_error(0, e))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != headers.len() {
            return Err(IngestError::MalformedCsv {
                row: line,
                reason: format!("expected {} fields, found {}", headers.len(), row.len()),
            });
        }
        let mut record = StudyRecord::default();
        for (cell, target) in row.iter().zip(&targets) {
            let Some(target) = target else { continue };
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            match target {
                ColumnTarget::Title => record.title = cell.to_string(),
                ColumnTarget::Doi => record.doi = Some(cell.to_string()),
                ColumnTarget::FirstAuthor => record.first_author = Some(cell.to_string()),
                ColumnTarget::Year => {
                    let year = cell.parse().map_err(|_| IngestError::MalformedCsv {
                        row: line,
                        reason: format!("year {cell:?} is not an integer"),
                    })?;
                    record.year = Some(year);
                }
                ColumnTarget::Property(label) => record
                    .values
                    .entry(label.clone())
                    .or_default()
                    .extend(split_cell(cell)),
            }
        }
        if record.title.is_empty() {
            return Err(IngestError::MalformedCsv {
                row: line,
                reason: "empty title".into(),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Column headers used when writing study tables: metadata fields, then
/// every leaf dose property in table order.
pub fn standard_headers() -> Vec<&'static str> {
    let mut headers = vec![
        vocabulary::TITLE,
        vocabulary::DOI,
        vocabulary::PUBLICATION_YEAR,
        vocabulary::FIRST_AUTHOR,
    ];
    for def in &RTMS_PROPERTIES {
        if def.sub_properties.is_empty() {
            headers.push(def.label);
        } else {
            headers.extend(def.sub_properties.iter().map(|s| s.label));
        }
    }
    headers
}

/// Writes records with [`standard_headers`]; multi-values are joined
/// with `;`.
pub fn write_csv(records: &[StudyRecord], output: impl Write) -> Result<(), ::csv::Error> {
    let headers = standard_headers();
    let mut writer = ::csv::Writer::from_writer(output);
    writer.write_record(&headers)?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.title.clone(),
            r.doi.clone().unwrap_or_default(),
            r.year.map(|y| y.to_string()).unwrap_or_default(),
            r.first_author.clone().unwrap_or_default(),
        ];
        for h in &headers[4..] {
            let sep = MULTI_VALUE_SEPARATOR.to_string();
            row.push(r.values.get(*h).map(|v| v.join(&sep)).unwrap_or_default());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
