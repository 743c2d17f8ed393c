//! Table typology: structure, cell content and header axes.
//!
//! The layout analysis here is shared with [`crate::transform`], which needs
//! the same header depth and block widths the classifier used.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::grid::RawGrid;
use crate::value::{self, CoarseType, ValueType};

/// Default characters that separate values inside a multivalued cell.
pub const DEFAULT_MULTIVALUE_DELIMITERS: [char; 4] = [',', ';', '/', '|'];

/// Minimum majority-type fraction for a body column to count as homogeneous.
const HOMOGENEITY_MIN: f64 = 0.9;
/// Minimum numeric fraction of a cross table interior.
const CROSS_NUMERIC_MIN: f64 = 0.9;
/// Deepest header stack considered.
const MAX_HEADER_LEVELS: usize = 3;
/// Fill-down applies to columns whose distinct values cover at most this
/// fraction of the body rows.
pub(crate) const FILL_DOWN_DISTINCT_RATIO: f64 = 0.5;

const HEADER_TOKENS: &[&str] = &[
    "address", "age", "amount", "category", "city", "class", "code", "count", "country",
    "date", "description", "email", "id", "kind", "label", "month", "name", "number", "price",
    "quantity", "rate", "region", "score", "status", "title", "total", "type", "value", "year",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Listing,
    Horizontal,
    Vertical,
    SuperRow,
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellContent {
    Simple,
    MergedCategory,
    MergedValue,
    Nested,
    MultivaluedSimple,
    MultivaluedComposed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderKind {
    None,
    Simple,
    Hierarchical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderArrangement {
    Single,
    Distributed,
    Duplicated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableTypology {
    pub structure: Structure,
    pub cell_content: BTreeSet<CellContent>,
    pub header: HeaderKind,
    /// `None` exactly when `header` is [`HeaderKind::None`].
    pub header_arrangement: Option<HeaderArrangement>,
}

impl TableTypology {
    pub fn has_cell(&self, c: CellContent) -> bool {
        self.cell_content.contains(&c)
    }

    pub fn is_merged(&self) -> bool {
        self.has_cell(CellContent::MergedCategory) || self.has_cell(CellContent::MergedValue)
    }

    pub fn is_multivalued(&self) -> bool {
        self.has_cell(CellContent::MultivaluedSimple)
            || self.has_cell(CellContent::MultivaluedComposed)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("typology serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    RowsAreTuples,
    ColumnsAreTuples,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("table reads both as a cross table (score {cross_score:.2}) and as a super-row table (score {super_row_score:.2})")]
    AmbiguousStructure {
        cross_score: f64,
        super_row_score: f64,
    },
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub multivalue_delimiters: Vec<char>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            multivalue_delimiters: DEFAULT_MULTIVALUE_DELIMITERS.to_vec(),
        }
    }
}

/// Header found at the top of a horizontally-read grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TopHeader {
    pub rows: usize,
    pub distributed_width: Option<usize>,
    pub duplicated: bool,
}

/// Everything the transform stage needs to know about a grid's layout.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub typology: TableTypology,
    /// Grid must be transposed to read rows as tuples.
    pub transpose: bool,
    /// Header depth in the row-oriented view.
    pub header: Option<TopHeader>,
    /// Header depth of the column rail when the table is a cross table.
    pub cross_header_rows: usize,
}

fn is_label(text: &str) -> bool {
    !text.is_empty()
        && !matches!(
            value::infer_type(text).coarse(),
            CoarseType::Numeric | CoarseType::Date
        )
}

fn all_distinct<'a>(items: impl IntoIterator<Item = &'a str>) -> bool {
    let mut seen = HashSet::new();
    items.into_iter().all(|s| seen.insert(s))
}

/// Splits a header label into lowercase word tokens (camelCase aware).
fn label_tokens(label: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut prev_lower = false;
    for c in label.chars() {
        if !c.is_alphanumeric() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            prev_lower = false;
            continue;
        }
        if c.is_uppercase() && prev_lower && !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        prev_lower = c.is_lowercase() || c.is_ascii_digit();
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn looks_like_header_name(label: &str) -> bool {
    label_tokens(label)
        .iter()
        .any(|t| HEADER_TOKENS.contains(&t.as_str()))
}

/// Header labels of the first `levels` rows per column, upper levels filled
/// rightwards over blanks.
pub(crate) fn stacked_labels(grid: &RawGrid, levels: usize, cols: std::ops::Range<usize>) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![Vec::with_capacity(levels); cols.len()];
    for level in 0..levels {
        let mut last = String::new();
        for (i, c) in cols.clone().enumerate() {
            let t = grid.text(level, c);
            let label = if t.is_empty() && level + 1 < levels {
                last.clone()
            } else {
                t.to_string()
            };
            last.clone_from(&label);
            out[i].push(label);
        }
    }
    out
}

/// Joins stacked labels into one name: lowercase, `_`-separated, empty and
/// consecutive repeated parts dropped.
pub(crate) fn join_levels(parts: &[String]) -> String {
    let mut names: Vec<String> = Vec::new();
    for p in parts {
        let n = value::snake_name(p);
        if !n.is_empty() && names.last() != Some(&n) {
            names.push(n);
        }
    }
    names.join("_")
}

fn body_is_homogeneous(grid: &RawGrid, header_rows: usize, skip: &HashSet<usize>) -> bool {
    (0..grid.n_cols()).all(|c| {
        let values = (header_rows..grid.n_rows())
            .filter(|r| !skip.contains(r))
            .map(|r| grid.text(r, c));
        value::homogeneity(values, value::coarse_key).is_none_or(|h| h >= HOMOGENEITY_MIN)
    })
}

fn has_typed_body_column(grid: &RawGrid, header_rows: usize, skip: &HashSet<usize>) -> bool {
    (0..grid.n_cols()).any(|c| {
        let mut counts = std::collections::BTreeMap::new();
        for r in (header_rows..grid.n_rows()).filter(|r| !skip.contains(r)) {
            if let Some(k) = value::coarse_key(grid.text(r, c)) {
                *counts.entry(k).or_insert(0usize) += 1;
            }
        }
        counts
            .into_iter()
            .max_by_key(|&(k, n)| (n, std::cmp::Reverse(k)))
            .is_some_and(|(k, _)| k != CoarseType::Text)
    })
}

/// Body rows that repeat one of the header rows verbatim.
fn repeated_header_rows(grid: &RawGrid, header_rows: usize) -> HashSet<usize> {
    let headers: Vec<Vec<&str>> = (0..header_rows).map(|r| grid.row_texts(r)).collect();
    (header_rows..grid.n_rows())
        .filter(|&r| {
            let row = grid.row_texts(r);
            headers.contains(&row)
        })
        .collect()
}

fn distributed_width(grid: &RawGrid) -> Option<usize> {
    let row = grid.row_texts(0);
    let n = row.len();
    (2..=n / 2).find(|&w| {
        n.is_multiple_of(w)
            && all_distinct(row[..w].iter().copied())
            && (0..n).all(|j| row[j] == row[j % w])
    })
}

/// Looks for a header at the top of the grid.
pub(crate) fn top_header(grid: &RawGrid) -> Option<TopHeader> {
    if grid.n_rows() < 2 {
        return None;
    }
    let row0 = grid.row_texts(0);
    let row0_labels = row0.iter().all(|t| is_label(t));

    let accept = |rows: usize, distributed_width: Option<usize>, inherent: bool| {
        let dups = repeated_header_rows(grid, rows);
        if dups.len() + rows >= grid.n_rows() || !body_is_homogeneous(grid, rows, &dups) {
            return None;
        }
        let evidence = inherent
            || has_typed_body_column(grid, rows, &dups)
            || (0..rows).any(|r| grid.row_texts(r).iter().any(|t| looks_like_header_name(t)));
        evidence.then_some(TopHeader {
            rows,
            distributed_width,
            duplicated: !dups.is_empty(),
        })
    };

    if row0_labels {
        if let Some(w) = distributed_width(grid) {
            if let Some(h) = accept(1, Some(w), false) {
                return Some(h);
            }
        }
        if all_distinct(row0.iter().copied()) {
            return accept(1, None, false);
        }
    }

    // Stacked levels: upper labels repeat (or span) over distinct lower ones.
    if row0.iter().all(|t| t.is_empty() || is_label(t)) && row0.iter().any(|t| !t.is_empty()) {
        for levels in 2..=MAX_HEADER_LEVELS.min(grid.n_rows() - 1) {
            let rows_ok = (1..levels)
                .all(|r| grid.row_texts(r).iter().all(|t| t.is_empty() || is_label(t)));
            if !rows_ok {
                break;
            }
            let keys: Vec<String> = stacked_labels(grid, levels, 0..grid.n_cols())
                .iter()
                .map(|parts| join_levels(parts))
                .collect();
            if keys.iter().all(|k| !k.is_empty()) && all_distinct(keys.iter().map(String::as_str)) {
                return accept(levels, None, false);
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CrossRails {
    pub header_rows: usize,
    pub score: f64,
}

/// Row labels down the first column, column labels across the top rows and a
/// numeric interior.
pub(crate) fn cross_rails(grid: &RawGrid) -> Option<CrossRails> {
    let (n_rows, n_cols) = (grid.n_rows(), grid.n_cols());
    if n_rows < 2 || n_cols < 2 {
        return None;
    }
    let top: Vec<&str> = (1..n_cols).map(|c| grid.text(0, c)).collect();
    let header_rows = if top.iter().all(|t| !t.is_empty()) && all_distinct(top.iter().copied()) {
        let corner = grid.text(0, 0);
        if !(corner.is_empty() || corner.contains('/')) {
            return None;
        }
        1
    } else {
        (2..=MAX_HEADER_LEVELS.min(n_rows - 1)).find(|&levels| {
            let last_full = (1..n_cols).all(|c| !grid.text(levels - 1, c).is_empty());
            let keys: Vec<String> = stacked_labels(grid, levels, 1..n_cols)
                .iter()
                .map(|p| p.join("\u{1f}"))
                .collect();
            last_full
                && all_distinct(keys.iter().map(String::as_str))
                && (0..levels).all(|r| !value::is_numeric(grid.text(r, 0)))
        })?
    };

    let mut labels = HashSet::new();
    let mut any_label = false;
    let (mut numeric, mut filled) = (0usize, 0usize);
    for r in header_rows..n_rows {
        let label = grid.text(r, 0);
        let interior_filled = (1..n_cols).filter(|&c| !grid.text(r, c).is_empty()).count();
        if label.is_empty() {
            if interior_filled > 0 {
                return None;
            }
            continue;
        }
        if !is_label(label) || !labels.insert(label) {
            return None;
        }
        any_label = true;
        filled += interior_filled;
        numeric += (1..n_cols)
            .filter(|&c| value::is_numeric(grid.text(r, c)))
            .count();
    }
    if !any_label || filled == 0 {
        return None;
    }
    let score = numeric as f64 / filled as f64;
    (score >= CROSS_NUMERIC_MIN).then_some(CrossRails { header_rows, score })
}

fn is_super_row(grid: &RawGrid, r: usize) -> bool {
    grid.n_cols() >= 2
        && !grid.text(r, 0).is_empty()
        && (1..grid.n_cols()).all(|c| grid.text(r, c).is_empty())
}

/// Body rows acting as category separators, or empty when the pattern is not
/// interleaved with ordinary rows.
pub(crate) fn super_rows(grid: &RawGrid, header_rows: usize) -> Vec<usize> {
    let supers: Vec<usize> = (header_rows..grid.n_rows())
        .filter(|&r| is_super_row(grid, r))
        .collect();
    let Some(&first) = supers.first() else {
        return supers;
    };
    let has_data_after = (first + 1..grid.n_rows())
        .any(|r| !is_super_row(grid, r) && !grid.is_row_empty(r));
    if has_data_after {
        supers
    } else {
        Vec::new()
    }
}

/// Label-like columns whose blanks read as vertically merged cells.
pub(crate) fn fill_down_columns(grid: &RawGrid, header_rows: usize) -> Vec<usize> {
    let body: Vec<usize> = (header_rows..grid.n_rows())
        .filter(|&r| !is_super_row(grid, r))
        .collect();
    if body.len() < 2 {
        return Vec::new();
    }
    (0..grid.n_cols())
        .filter(|&c| {
            let values: Vec<&str> = body.iter().map(|&r| grid.text(r, c)).collect();
            let non_empty: Vec<&str> = values.iter().copied().filter(|v| !v.is_empty()).collect();
            if non_empty.is_empty() || non_empty.len() == values.len() {
                return false;
            }
            let numeric = non_empty.iter().filter(|v| value::is_numeric(v)).count();
            if numeric * 2 >= non_empty.len() {
                return false;
            }
            let distinct: HashSet<&str> = non_empty.iter().copied().collect();
            if distinct.len() as f64 > FILL_DOWN_DISTINCT_RATIO * values.len() as f64 {
                return false;
            }
            // a blank with something above it
            values
                .iter()
                .enumerate()
                .skip(1)
                .any(|(i, v)| v.is_empty() && values[..i].iter().any(|u| !u.is_empty()))
        })
        .collect()
}

/// Splits a cell into multivalue parts, or `None` when it holds one value.
pub(crate) fn multivalue_parts<'a>(text: &'a str, delimiters: &[char]) -> Option<Vec<&'a str>> {
    if text.is_empty()
        || matches!(
            value::infer_type(text),
            ValueType::Integer | ValueType::Float | ValueType::Date
        )
    {
        return None;
    }
    let parts: Vec<&str> = text.split(|c| delimiters.contains(&c)).map(str::trim).collect();
    (parts.len() >= 2 && parts.iter().all(|p| !p.is_empty())).then_some(parts)
}

/// `true` when all parts share one coarse type.
pub(crate) fn parts_share_type(parts: &[&str]) -> bool {
    let first = value::infer_type(parts[0]).coarse();
    parts.iter().all(|p| value::infer_type(p).coarse() == first)
}

fn looks_nested(text: &str) -> bool {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() < 2 {
        return false;
    }
    ['\t', ',', ';', '|'].iter().any(|&d| {
        let width = lines[0].split(d).count();
        width >= 2 && lines.iter().all(|l| l.split(d).count() == width)
    })
}

fn cell_content(
    view: &RawGrid,
    header_rows: usize,
    first_body_col: usize,
    opts: &ClassifyOptions,
) -> BTreeSet<CellContent> {
    let mut set = BTreeSet::new();
    for row in view.rows() {
        for cell in row {
            if cell.nested || looks_nested(&cell.text) {
                set.insert(CellContent::Nested);
            }
            if cell.is_merged() && !cell.is_empty() {
                set.insert(if value::is_numeric(&cell.text) {
                    CellContent::MergedValue
                } else {
                    CellContent::MergedCategory
                });
            }
        }
    }
    if !fill_down_columns(view, header_rows).is_empty() {
        set.insert(CellContent::MergedCategory);
    }
    for r in header_rows..view.n_rows() {
        for c in first_body_col..view.n_cols() {
            if let Some(parts) = multivalue_parts(view.text(r, c), &opts.multivalue_delimiters) {
                set.insert(if parts_share_type(&parts) {
                    CellContent::MultivaluedSimple
                } else {
                    CellContent::MultivaluedComposed
                });
            }
        }
    }
    if set.is_empty() {
        set.insert(CellContent::Simple);
    }
    set
}

fn header_axis(header: Option<TopHeader>) -> (HeaderKind, Option<HeaderArrangement>) {
    match header {
        None => (HeaderKind::None, None),
        Some(h) => {
            let kind = if h.rows > 1 {
                HeaderKind::Hierarchical
            } else {
                HeaderKind::Simple
            };
            let arrangement = if h.distributed_width.is_some() {
                HeaderArrangement::Distributed
            } else if h.duplicated {
                HeaderArrangement::Duplicated
            } else {
                HeaderArrangement::Single
            };
            (kind, Some(arrangement))
        }
    }
}

/// Decides whether rows or columns carry the tuples by comparing the type
/// homogeneity of columns against that of rows.
pub fn detect_orientation(grid: &RawGrid) -> Orientation {
    let (r0, c0) = if grid.n_rows() >= 3 && grid.n_cols() >= 3 {
        (1, 1)
    } else {
        (0, 0)
    };
    let mean = |scores: Vec<f64>| {
        if scores.is_empty() {
            1.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        }
    };
    let col_scores: Vec<f64> = (c0..grid.n_cols())
        .filter_map(|c| value::homogeneity((r0..grid.n_rows()).map(|r| grid.text(r, c)), value::fine_key))
        .collect();
    let row_scores: Vec<f64> = (r0..grid.n_rows())
        .filter_map(|r| value::homogeneity((c0..grid.n_cols()).map(|c| grid.text(r, c)), value::fine_key))
        .collect();
    if mean(col_scores) >= mean(row_scores) {
        Orientation::RowsAreTuples
    } else {
        Orientation::ColumnsAreTuples
    }
}

pub(crate) fn analyze(grid: &RawGrid, opts: &ClassifyOptions) -> Result<Layout, ClassifyError> {
    let (n_rows, n_cols) = (grid.n_rows(), grid.n_cols());

    if n_rows == 1 || n_cols == 1 {
        let transpose = n_rows == 1 && n_cols > 1;
        let view = if transpose { grid.transpose() } else { grid.clone() };
        let header = top_header(&view);
        let (kind, arrangement) = header_axis(header);
        return Ok(Layout {
            typology: TableTypology {
                structure: Structure::Listing,
                cell_content: cell_content(&view, header.map_or(0, |h| h.rows), 0, opts),
                header: kind,
                header_arrangement: arrangement,
            },
            transpose,
            header,
            cross_header_rows: 0,
        });
    }

    let top = top_header(grid);
    let cross = cross_rails(grid);
    let supers = super_rows(grid, top.map_or(0, |h| h.rows));

    if let Some(rails) = cross {
        if !supers.is_empty() {
            let body = (rails.header_rows..n_rows).count().max(1);
            return Err(ClassifyError::AmbiguousStructure {
                cross_score: rails.score,
                super_row_score: supers.len() as f64 / body as f64,
            });
        }
        let header = TopHeader {
            rows: rails.header_rows,
            distributed_width: None,
            duplicated: false,
        };
        let (kind, arrangement) = header_axis(Some(header));
        return Ok(Layout {
            typology: TableTypology {
                structure: Structure::Cross,
                cell_content: cell_content(grid, rails.header_rows, 1, opts),
                header: kind,
                header_arrangement: arrangement,
            },
            transpose: false,
            header: Some(header),
            cross_header_rows: rails.header_rows,
        });
    }

    if !supers.is_empty() {
        let (kind, arrangement) = header_axis(top);
        return Ok(Layout {
            typology: TableTypology {
                structure: Structure::SuperRow,
                cell_content: cell_content(grid, top.map_or(0, |h| h.rows), 0, opts),
                header: kind,
                header_arrangement: arrangement,
            },
            transpose: false,
            header: top,
            cross_header_rows: 0,
        });
    }

    let transposed = grid.transpose();
    let left = top_header(&transposed);
    let vertical = match (top.is_some(), left.is_some()) {
        (true, false) => false,
        (false, true) => true,
        _ => detect_orientation(grid) == Orientation::ColumnsAreTuples,
    };
    let (view, header) = if vertical {
        (&transposed, left)
    } else {
        (grid, top)
    };
    let (kind, arrangement) = header_axis(header);
    Ok(Layout {
        typology: TableTypology {
            structure: if vertical {
                Structure::Vertical
            } else {
                Structure::Horizontal
            },
            cell_content: cell_content(view, header.map_or(0, |h| h.rows), 0, opts),
            header: kind,
            header_arrangement: arrangement,
        },
        transpose: vertical,
        header,
        cross_header_rows: 0,
    })
}

/// Classifies a grid on the three typology axes with default options.
pub fn classify_table(grid: &RawGrid) -> Result<TableTypology, ClassifyError> {
    classify_table_with(grid, &ClassifyOptions::default())
}

pub fn classify_table_with(
    grid: &RawGrid,
    opts: &ClassifyOptions,
) -> Result<TableTypology, ClassifyError> {
    analyze(grid, opts).map(|l| l.typology)
}
