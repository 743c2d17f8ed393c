use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::transform::TransformStep;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("attribute name at position {0} is empty")]
    EmptyAttributeName(usize),
    #[error("attribute `{0}` appears more than once")]
    DuplicateAttribute(String),
    #[error("row {row} has {found} values, expected {expected}")]
    RowWidth {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("row {0} is entirely empty")]
    EmptyRow(usize),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("CSV: {0}")]
    Csv(String),
}

/// Where a canonical table came from and how it was rewritten.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_name: String,
    pub steps: Vec<TransformStep>,
}

/// Flat, horizontal table: one header of unique names, one tuple per row.
/// Missing values are empty strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalTable {
    attributes: Vec<String>,
    rows: Vec<Vec<String>>,
    pub provenance: Provenance,
}

impl CanonicalTable {
    pub fn new(
        attributes: Vec<String>,
        rows: Vec<Vec<String>>,
        provenance: Provenance,
    ) -> Result<Self, TableError> {
        let mut seen = HashSet::new();
        for (i, a) in attributes.iter().enumerate() {
            if a.is_empty() {
                return Err(TableError::EmptyAttributeName(i));
            }
            if !seen.insert(a.as_str()) {
                return Err(TableError::DuplicateAttribute(a.clone()));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != attributes.len() {
                return Err(TableError::RowWidth {
                    row: i,
                    found: r.len(),
                    expected: attributes.len(),
                });
            }
            if r.iter().all(String::is_empty) {
                return Err(TableError::EmptyRow(i));
            }
        }
        Ok(CanonicalTable {
            attributes,
            rows,
            provenance,
        })
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn index_of(&self, attribute: &str) -> Result<usize, TableError> {
        self.attributes
            .iter()
            .position(|a| a == attribute)
            .ok_or_else(|| TableError::UnknownAttribute(attribute.to_string()))
    }

    pub fn column(&self, index: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[index].as_str())
    }

    /// RFC-4180 CSV, UTF-8, LF line endings, header first.
    pub fn to_csv(&self) -> String {
        write_csv(&self.attributes, &self.rows)
    }

    /// Reads a canonical CSV as produced by [`CanonicalTable::to_csv`].
    pub fn from_csv(text: &str, source_name: &str) -> Result<Self, TableError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let attributes = reader
            .headers()
            .map_err(|e| TableError::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| TableError::Csv(e.to_string()))?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        CanonicalTable::new(
            attributes,
            rows,
            Provenance {
                source_name: source_name.to_string(),
                steps: Vec::new(),
            },
        )
    }
}

pub(crate) fn write_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for r in rows {
        writer.write_record(r).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("UTF-8 input")
}

/// Makes header names non-empty and unique: blanks become `col_<n>`,
/// repeats get `_2`, `_3`, ... suffixes.
pub(crate) fn repair_names(names: &[String]) -> Vec<String> {
    let mut used: HashSet<String> = HashSet::new();
    let mut counters: HashMap<String, usize> = HashMap::new();
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let base = if n.trim().is_empty() {
                format!("col_{}", i + 1)
            } else {
                n.trim().to_string()
            };
            let mut candidate = base.clone();
            while used.contains(&candidate) {
                let k = counters.entry(base.clone()).or_insert(1);
                *k += 1;
                candidate = format!("{base}_{k}");
            }
            used.insert(candidate.clone());
            candidate
        })
        .collect()
}
