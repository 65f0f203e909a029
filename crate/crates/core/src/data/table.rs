//! CSV loading into an in-memory string table.

use std::path::Path;

use crate::data::format::{ColumnSpec, DataFormat};
use crate::error::{Error, Result};

/// A cleaned string table: attribute cells and raw labels, with rows that
/// contained the missing marker already dropped (order preserved).
///
/// Label values arrive with surrounding whitespace and any trailing period
/// stripped, so the official census test file's ">50K." matches ">50K".
#[derive(Debug, Clone)]
pub struct RawTable {
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<Vec<String>>,
    pub labels: Vec<String>,
    /// Label string mapping to 1, carried over from the format spec.
    pub label_positive: String,
    pub dropped_missing: usize,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

fn normalize_label(raw: &str) -> String {
    raw.trim().trim_end_matches('.').to_string()
}

/// Read a CSV file against a format spec.
///
/// Cells are whitespace-trimmed. Rows whose field count differs from the
/// format's arity fail with the 1-based line number. Rows containing the
/// missing marker in any field are dropped and counted.
pub fn load_csv(path: &Path, format: &DataFormat) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(format.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // the census files end with an empty line; csv already skips blanks
        let line = i as u64 + if format.has_header { 2 } else { 1 };
        if record.len() != format.arity() {
            return Err(Error::RowArity {
                line,
                expected: format.arity(),
                got: record.len(),
            });
        }
        if record.iter().any(|cell| cell == format.missing_marker) {
            dropped += 1;
            continue;
        }
        let mut cells: Vec<String> = record.iter().map(str::to_string).collect();
        let label = cells.pop().expect("arity checked");
        rows.push(cells);
        labels.push(normalize_label(&label));
    }

    if rows.is_empty() {
        return Err(Error::NoDataRows);
    }
    Ok(RawTable {
        columns: format.columns.clone(),
        rows,
        labels,
        label_positive: format.label_positive.clone(),
        dropped_missing: dropped,
    })
}
