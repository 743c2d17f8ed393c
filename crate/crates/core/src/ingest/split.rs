use std::ops::Range;

use crate::grid::RawGrid;

/// Splits a sheet into tables at runs of fully-empty rows and columns,
/// recursively, tightening each piece to its non-empty extent. Pieces come
/// out top-to-bottom, then left-to-right.
pub fn split_tables(grid: &RawGrid) -> Vec<RawGrid> {
    let mut out = Vec::new();
    cut(grid, 0..grid.n_rows(), 0..grid.n_cols(), &mut out);
    out
}

fn occupied_runs(len: usize, occupied: impl Fn(usize) -> bool) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = None;
    for i in 0..len {
        match (occupied(i), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(s..len);
    }
    runs
}

fn cut(grid: &RawGrid, rows: Range<usize>, cols: Range<usize>, out: &mut Vec<RawGrid>) {
    let row_runs = occupied_runs(rows.len(), |i| {
        cols.clone().any(|c| !grid.cell(rows.start + i, c).is_empty())
    });
    for rr in row_runs {
        let band = rows.start + rr.start..rows.start + rr.end;
        let col_runs = occupied_runs(cols.len(), |j| {
            band.clone().any(|r| !grid.cell(r, cols.start + j).is_empty())
        });
        let single = col_runs.len() == 1;
        for cr in col_runs {
            let block_cols = cols.start + cr.start..cols.start + cr.end;
            if single && band == rows && block_cols == cols {
                out.push(grid.slice(band.clone(), block_cols));
            } else {
                cut(grid, band.clone(), block_cols, out);
            }
        }
    }
}
