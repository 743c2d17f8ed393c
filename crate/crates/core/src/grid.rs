use serde::{Deserialize, Serialize};

use crate::value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Encoding {
    #[serde(rename = "UTF-8")]
    Utf8,
    #[serde(rename = "Latin-1")]
    Latin1,
}

/// How a delimited text source was read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialect {
    pub field_delimiter: char,
    pub quote_character: char,
    pub encoding: Encoding,
    pub has_bom: bool,
}

/// One cell of a raw grid. Text is always trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cell {
    pub text: String,
    pub row_span: usize,
    pub col_span: usize,
    /// The cell held a table of its own.
    pub nested: bool,
}

impl Cell {
    pub fn new(text: impl AsRef<str>) -> Self {
        Cell {
            text: text.as_ref().trim().to_string(),
            row_span: 1,
            col_span: 1,
            nested: false,
        }
    }

    pub fn empty() -> Self {
        Cell::new("")
    }

    pub fn with_span(mut self, row_span: usize, col_span: usize) -> Self {
        self.row_span = row_span.max(1);
        self.col_span = col_span.max(1);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn is_merged(&self) -> bool {
        self.row_span > 1 || self.col_span > 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("grid has no cells")]
    Empty,
    #[error("row {row} has {found} cells, expected {expected}")]
    NotRectangular {
        row: usize,
        found: usize,
        expected: usize,
    },
}

/// Rectangular grid of cells as read from a source, before interpretation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawGrid {
    cells: Vec<Vec<Cell>>,
    pub source_name: String,
    /// (row, column) offset of the top-left cell within the source sheet.
    pub origin: (usize, usize),
    pub dialect: Option<Dialect>,
}

impl RawGrid {
    pub fn new(cells: Vec<Vec<Cell>>, source_name: impl Into<String>) -> Result<Self, GridError> {
        let n_cols = cells.first().map(Vec::len).unwrap_or(0);
        if cells.is_empty() || n_cols == 0 {
            return Err(GridError::Empty);
        }
        for (row, r) in cells.iter().enumerate() {
            if r.len() != n_cols {
                return Err(GridError::NotRectangular {
                    row,
                    found: r.len(),
                    expected: n_cols,
                });
            }
        }
        Ok(RawGrid {
            cells,
            source_name: source_name.into(),
            origin: (0, 0),
            dialect: None,
        })
    }

    /// Builds a grid of plain 1×1 cells from text rows.
    pub fn from_rows<R, S>(rows: R, source_name: impl Into<String>) -> Result<Self, GridError>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cells = rows
            .into_iter()
            .map(|r| r.into_iter().map(Cell::new).collect())
            .collect();
        RawGrid::new(cells, source_name)
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cells[0].len()
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row][col]
    }

    pub fn text(&self, row: usize, col: usize) -> &str {
        &self.cells[row][col].text
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.cells
    }

    pub fn row_texts(&self, row: usize) -> Vec<&str> {
        self.cells[row].iter().map(|c| c.text.as_str()).collect()
    }

    pub fn column_texts(&self, col: usize) -> Vec<&str> {
        self.cells.iter().map(|r| r[col].text.as_str()).collect()
    }

    pub fn to_text_rows(&self) -> Vec<Vec<String>> {
        self.cells
            .iter()
            .map(|r| r.iter().map(|c| c.text.clone()).collect())
            .collect()
    }

    pub fn is_row_empty(&self, row: usize) -> bool {
        self.cells[row].iter().all(Cell::is_empty)
    }

    pub fn is_col_empty(&self, col: usize) -> bool {
        self.cells.iter().all(|r| r[col].is_empty())
    }

    pub fn has_spans(&self) -> bool {
        self.cells.iter().flatten().any(Cell::is_merged)
    }

    pub fn non_empty_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| !c.is_empty()).count()
    }

    /// Rows and columns swapped; spans follow their cells.
    pub fn transpose(&self) -> RawGrid {
        let cells = (0..self.n_cols())
            .map(|c| {
                (0..self.n_rows())
                    .map(|r| {
                        let mut cell = self.cells[r][c].clone();
                        std::mem::swap(&mut cell.row_span, &mut cell.col_span);
                        cell
                    })
                    .collect()
            })
            .collect();
        RawGrid {
            cells,
            source_name: self.source_name.clone(),
            origin: (self.origin.1, self.origin.0),
            dialect: self.dialect,
        }
    }

    /// Sub-grid over the half-open row and column ranges.
    pub fn slice(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> RawGrid {
        let cells = self.cells[rows.clone()]
            .iter()
            .map(|r| r[cols.clone()].to_vec())
            .collect();
        RawGrid {
            cells,
            source_name: self.source_name.clone(),
            origin: (self.origin.0 + rows.start, self.origin.1 + cols.start),
            dialect: self.dialect,
        }
    }

    /// Same metadata, new cells. Callers guarantee rectangularity.
    pub(crate) fn with_cells(&self, cells: Vec<Vec<Cell>>) -> RawGrid {
        debug_assert!(!cells.is_empty() && cells.iter().all(|r| r.len() == cells[0].len()));
        RawGrid {
            cells,
            source_name: self.source_name.clone(),
            origin: self.origin,
            dialect: self.dialect,
        }
    }

    /// Whether every non-empty cell in the row parses as a number.
    pub fn row_is_numeric(&self, row: usize) -> bool {
        self.cells[row]
            .iter()
            .filter(|c| !c.is_empty())
            .all(|c| value::is_numeric(&c.text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_empty() {
        assert_eq!(
            RawGrid::from_rows(vec![vec!["a", "b"], vec!["c"]], "t"),
            Err(GridError::NotRectangular {
                row: 1,
                found: 1,
                expected: 2
            })
        );
        assert_eq!(
            RawGrid::from_rows(Vec::<Vec<&str>>::new(), "t"),
            Err(GridError::Empty)
        );
    }

    #[test]
    fn transpose_swaps_spans() {
        let g = RawGrid::new(vec![vec![Cell::new("a").with_span(1, 2), Cell::new("a")]], "t")
            .unwrap();
        let t = g.transpose();
        assert_eq!((t.n_rows(), t.n_cols()), (2, 1));
        assert_eq!(t.cell(0, 0).row_span, 2);
        assert_eq!(t.transpose(), g);
    }
}
