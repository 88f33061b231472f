use std::fmt;
use std::str::FromStr;

use super::ComparisonTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
    Markdown,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
            ExportFormat::Markdown => "md",
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            "md" | "markdown" => Ok(ExportFormat::Markdown),
            other => Err(format!(
                "unknown export format {other:?} (expected csv, json or md)"
            )),
        }
    }
}

const CELL_SEPARATOR: &str = "; ";

fn csv(table: &ComparisonTable) -> String {
    let mut writer = ::csv::Writer::from_writer(Vec::new());
    let header =
        std::iter::once("property").chain(table.contributions.iter().map(|c| c.title.as_str()));
    writer.write_record(header).expect("in-memory write");
    for row in &table.rows {
        let cells = row.cells.iter().map(|c| c.join(CELL_SEPARATOR));
        writer
            .write_record(std::iter::once(row.property.clone()).chain(cells))
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("UTF-8 input")
}

fn md_cell(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('|', "\\|")
        .replace(['\r', '\n'], " ")
}

fn markdown(table: &ComparisonTable) -> String {
    let mut out = String::new();
    let mut line = |cells: Vec<String>| {
        out.push_str("| ");
        out.push_str(&cells.join(" | "));
        out.push_str(" |\n");
    };
    let width = table.contributions.len() + 1;
    line(
        std::iter::once("Property".to_string())
            .chain(table.contributions.iter().map(|c| md_cell(&c.title)))
            .collect(),
    );
    line(vec!["---".to_string(); width]);
    for row in &table.rows {
        line(
            std::iter::once(md_cell(&row.property))
                .chain(row.cells.iter().map(|c| md_cell(&c.join(CELL_SEPARATOR))))
                .collect(),
        );
    }
    out
}

/// Renders a table. Multi-valued cells are joined with `"; "`.
pub fn export_comparison(table: &ComparisonTable, format: ExportFormat) -> String {
    match format {
        ExportFormat::Csv => csv(table),
        ExportFormat::Json => serde_json::to_string_pretty(table).expect("tables serialize") + "\n",
        ExportFormat::Markdown => markdown(table),
    }
}
