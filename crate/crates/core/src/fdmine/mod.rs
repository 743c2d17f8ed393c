//! Unary functional dependencies: discovery, minimal cover and equivalence
//! classes.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::table::CanonicalTable;

mod cover;
mod oracle;

pub use cover::{equivalence_classes, minimal_cover};
pub use oracle::brute_force_fds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalDependency {
    pub lhs: String,
    pub rhs: String,
    /// Share of rows to delete for the dependency to hold exactly.
    pub error: f64,
}

impl FunctionalDependency {
    pub fn exact(lhs: &str, rhs: &str) -> Self {
        FunctionalDependency {
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            error: 0.0,
        }
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.lhs, &self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FdError {
    #[error("{0} rows: every dependency holds vacuously")]
    TooFewRows(usize),
    #[error("threshold {0} outside [0, 1)")]
    InvalidThreshold(f64),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
}

/// Dense value codes for one column; `None` marks a missing value.
#[derive(Debug, Clone)]
pub struct ColumnCodes {
    pub codes: Vec<Option<u32>>,
    pub n_values: usize,
}

impl ColumnCodes {
    pub fn encode<'a>(values: impl IntoIterator<Item = &'a str>) -> Self {
        let mut ids: HashMap<&str, u32> = HashMap::new();
        let codes = values
            .into_iter()
            .map(|v| {
                if v.is_empty() {
                    None
                } else {
                    let next = ids.len() as u32;
                    Some(*ids.entry(v).or_insert(next))
                }
            })
            .collect();
        ColumnCodes {
            codes,
            n_values: ids.len(),
        }
    }
}

/// Row groups of size at least two sharing a value. Missing values and
/// singletons are stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrippedPartition {
    pub groups: Vec<Vec<usize>>,
    pub n_rows: usize,
}

impl StrippedPartition {
    pub fn from_codes(column: &ColumnCodes) -> Self {
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); column.n_values];
        for (row, code) in column.codes.iter().enumerate() {
            if let Some(c) = code {
                buckets[*c as usize].push(row);
            }
        }
        StrippedPartition {
            groups: buckets.into_iter().filter(|g| g.len() >= 2).collect(),
            n_rows: column.codes.len(),
        }
    }

    /// Rows to delete so that this partition's attribute determines `rhs`.
    /// Missing right-hand values never agree with anything.
    pub fn violations(&self, rhs: &ColumnCodes, scratch: &mut Vec<u32>) -> usize {
        scratch.clear();
        scratch.resize(rhs.n_values, 0);
        let mut total = 0;
        for group in &self.groups {
            let mut best = 0;
            let mut any_missing = false;
            for &row in group {
                match rhs.codes[row] {
                    Some(c) => {
                        let slot = &mut scratch[c as usize];
                        *slot += 1;
                        best = best.max(*slot);
                    }
                    None => any_missing = true,
                }
            }
            if best == 0 && any_missing {
                best = 1;
            }
            total += group.len() - best as usize;
            for &row in group {
                if let Some(c) = rhs.codes[row] {
                    scratch[c as usize] = 0;
                }
            }
        }
        total
    }
}

fn fraction(violations: usize, n_rows: usize) -> f64 {
    if n_rows == 0 {
        0.0
    } else {
        violations as f64 / n_rows as f64
    }
}

pub fn g3_error(table: &CanonicalTable, lhs: &str, rhs: &str) -> Result<f64, FdError> {
    let index = |a: &str| table.index_of(a).map_err(|_| FdError::UnknownAttribute(a.to_string()));
    let (l, r) = (index(lhs)?, index(rhs)?);
    let partition = StrippedPartition::from_codes(&ColumnCodes::encode(table.column(l)));
    let rhs_codes = ColumnCodes::encode(table.column(r));
    Ok(fraction(
        partition.violations(&rhs_codes, &mut Vec::new()),
        table.n_rows(),
    ))
}

/// Every `A -> B` over attributes outside `exclude` whose g3 error is at most
/// `threshold`, sorted by (lhs, rhs).
pub fn mine_unary_fds(
    table: &CanonicalTable,
    exclude: &BTreeSet<String>,
    threshold: f64,
) -> Result<Vec<FunctionalDependency>, FdError> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(FdError::InvalidThreshold(threshold));
    }
    if let Some(unknown) = exclude.iter().find(|a| table.index_of(a).is_err()) {
        return Err(FdError::UnknownAttribute(unknown.clone()));
    }
    let n = table.n_rows();
    if n < 2 {
        return Err(FdError::TooFewRows(n));
    }
    let attrs: Vec<(usize, &String)> = table
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| !exclude.contains(*a))
        .collect();
    let codes: Vec<ColumnCodes> = attrs
        .iter()
        .map(|(i, _)| ColumnCodes::encode(table.column(*i)))
        .collect();
    let partitions: Vec<StrippedPartition> = codes.iter().map(StrippedPartition::from_codes).collect();

    let mut scratch = Vec::new();
    let mut out = Vec::new();
    for (a, (_, lhs)) in attrs.iter().enumerate() {
        for (b, (_, rhs)) in attrs.iter().enumerate() {
            if a == b {
                continue;
            }
            let error = fraction(partitions[a].violations(&codes[b], &mut scratch), n);
            if error <= threshold {
                out.push(FunctionalDependency {
                    lhs: (*lhs).clone(),
                    rhs: (*rhs).clone(),
                    error,
                });
            }
        }
    }
    out.sort_by(|x, y| x.key().cmp(&y.key()));
    Ok(out)
}
