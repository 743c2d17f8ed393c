use std::collections::HashSet;

use super::{failed, CrossNames, HierarchyHint, TransformError, TransformStep};
use crate::classify;
use crate::grid::{Cell, RawGrid};
use crate::table::{repair_names, CanonicalTable, Provenance};
use crate::value;

pub(super) struct Working {
    pub grid: RawGrid,
    pub header_rows: usize,
    pub hints: Vec<HierarchyHint>,
}

fn text_rows_to_grid(like: &RawGrid, rows: Vec<Vec<String>>) -> Result<RawGrid, TransformError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(failed("rebuild", "step produced an empty grid"));
    }
    Ok(like.with_cells(
        rows.into_iter()
            .map(|r| r.into_iter().map(Cell::new).collect())
            .collect(),
    ))
}

pub(super) fn apply(step: &TransformStep, mut w: Working) -> Result<Working, TransformError> {
    match step {
        TransformStep::Transpose => {
            w.grid = w.grid.transpose();
        }
        TransformStep::RemoveRepeatedHeaders { header_rows } => {
            let h = *header_rows;
            if h == 0 || h >= w.grid.n_rows() {
                return Err(failed(step.name(), "header rows out of range"));
            }
            let headers: Vec<Vec<String>> = w.grid.to_text_rows()[..h].to_vec();
            let cells: Vec<Vec<Cell>> = w
                .grid
                .rows()
                .iter()
                .enumerate()
                .filter(|(i, row)| {
                    *i < h || !headers.iter().any(|hdr| row.iter().map(|c| &c.text).eq(hdr.iter()))
                })
                .map(|(_, row)| row.clone())
                .collect();
            w.grid = w.grid.with_cells(cells);
            w.header_rows = h;
        }
        TransformStep::StackDistributedBlocks { width } => {
            w.grid = stack_blocks(&w.grid, *width)?;
            w.header_rows = 1;
        }
        TransformStep::FlattenHeader { levels } => {
            let levels = *levels;
            if levels == 0 || levels >= w.grid.n_rows() {
                return Err(failed(step.name(), "header levels out of range"));
            }
            let n_cols = w.grid.n_cols();
            let header: Vec<String> = classify::stacked_labels(&w.grid, levels, 0..n_cols)
                .iter()
                .map(|parts| classify::join_levels(parts))
                .collect();
            let mut rows = vec![header];
            rows.extend(w.grid.to_text_rows().into_iter().skip(levels));
            w.grid = text_rows_to_grid(&w.grid, rows)?;
            w.header_rows = 1;
        }
        TransformStep::ExpandMerged { header_rows } => {
            w.grid = expand_merged(&w.grid, *header_rows);
            w.header_rows = *header_rows;
        }
        TransformStep::SuperRowsToColumn { header_rows } => {
            w.grid = super_rows_to_column(&w.grid, *header_rows)?;
            w.header_rows = *header_rows;
        }
        TransformStep::UnpivotCross { header_rows } => {
            if classify::cross_rails(&w.grid).map(|r| r.header_rows) != Some(*header_rows) {
                return Err(failed(step.name(), "grid lost its cross-table rails"));
            }
            let (header, rows, hint) = unpivot(&w.grid, *header_rows, None);
            let mut all = vec![header];
            all.extend(rows);
            w.grid = text_rows_to_grid(&w.grid, all)?;
            w.header_rows = 1;
            w.hints.extend(hint);
        }
        TransformStep::ExplodeMultivalued {
            header_rows,
            delimiters,
        } => {
            let delimiters: Vec<char> = delimiters.chars().collect();
            w.grid = explode(&w.grid, *header_rows, &delimiters)?;
            w.header_rows = *header_rows;
        }
        TransformStep::SynthesizeHeader => {
            w.grid = synthesize_header(&w.grid);
            w.header_rows = 1;
        }
    }
    Ok(w)
}

pub(super) fn build(
    w: Working,
    source_name: &str,
    steps: Vec<TransformStep>,
) -> Result<(CanonicalTable, Vec<HierarchyHint>), TransformError> {
    let rows = w.grid.to_text_rows();
    let attributes = repair_names(&rows[w.header_rows - 1]);
    let body: Vec<Vec<String>> = rows
        .into_iter()
        .skip(w.header_rows)
        .filter(|r| r.iter().any(|v| !v.is_empty()))
        .collect();
    let table = CanonicalTable::new(
        attributes,
        body,
        Provenance {
            source_name: source_name.to_string(),
            steps,
        },
    )?;
    let known: HashSet<&str> = table.attributes().iter().map(String::as_str).collect();
    let hints = w
        .hints
        .into_iter()
        .filter(|h| h.levels.len() >= 2 && h.levels.iter().all(|l| known.contains(l.as_str())))
        .collect();
    Ok((table, hints))
}

fn stack_blocks(grid: &RawGrid, width: usize) -> Result<RawGrid, TransformError> {
    let n_cols = grid.n_cols();
    if width == 0 || !n_cols.is_multiple_of(width) {
        return Err(TransformError::HeaderRepairFailed(format!(
            "{n_cols} columns do not split into blocks of {width}"
        )));
    }
    let header = grid.row_texts(0);
    if (0..n_cols).any(|j| header[j] != header[j % width]) {
        return Err(TransformError::HeaderRepairFailed(
            "header blocks differ".into(),
        ));
    }
    let mut cells: Vec<Vec<Cell>> = vec![grid.rows()[0][..width].to_vec()];
    for block in 0..n_cols / width {
        for row in &grid.rows()[1..] {
            cells.push(row[block * width..(block + 1) * width].to_vec());
        }
    }
    Ok(grid.with_cells(cells))
}

/// Fills blanks in label-like columns with the value above. Value columns and
/// super-row separators are left alone; a super row stops the fill.
pub fn expand_merged(grid: &RawGrid, header_rows: usize) -> RawGrid {
    let columns = classify::fill_down_columns(grid, header_rows);
    if columns.is_empty() {
        return grid.clone();
    }
    let mut cells = grid.rows().to_vec();
    for c in columns {
        let mut above: Option<String> = None;
        for row in cells.iter_mut().skip(header_rows) {
            let is_super = row.len() >= 2
                && !row[0].is_empty()
                && row[1..].iter().all(Cell::is_empty);
            if is_super {
                above = None;
                continue;
            }
            if row[c].is_empty() {
                if let Some(v) = &above {
                    row[c] = Cell::new(v);
                }
            } else {
                above = Some(row[c].text.clone());
            }
        }
    }
    grid.with_cells(cells)
}

fn super_rows_to_column(grid: &RawGrid, header_rows: usize) -> Result<RawGrid, TransformError> {
    let supers: HashSet<usize> = classify::super_rows(grid, header_rows).into_iter().collect();
    if supers.is_empty() {
        return Err(failed("super_rows_to_column", "no super rows found"));
    }
    // nesting depth = longest run of consecutive super rows
    let mut depth = 0;
    let mut run = 0;
    for r in header_rows..grid.n_rows() {
        if supers.contains(&r) {
            run += 1;
            depth = usize::max(depth, run);
        } else {
            run = 0;
        }
    }

    let text = grid.to_text_rows();
    let mut out: Vec<Vec<String>> = Vec::with_capacity(text.len());
    for (i, row) in text.iter().enumerate().take(header_rows) {
        let mut new_row: Vec<String> = if i + 1 == header_rows {
            (1..=depth).map(|k| format!("super_row_{k}")).collect()
        } else {
            vec![String::new(); depth]
        };
        new_row.extend(row.iter().cloned());
        out.push(new_row);
    }
    let mut levels = vec![String::new(); depth];
    let mut r = header_rows;
    while r < grid.n_rows() {
        if supers.contains(&r) {
            let start = r;
            while r < grid.n_rows() && supers.contains(&r) {
                r += 1;
            }
            let run = r - start;
            for (k, sr) in (start..r).enumerate() {
                levels[depth - run + k] = text[sr][0].clone();
            }
            continue;
        }
        let mut new_row = levels.clone();
        new_row.extend(text[r].iter().cloned());
        out.push(new_row);
        r += 1;
    }
    text_rows_to_grid(grid, out)
}

/// Header plus tuples of an unpivoted cross table, and the hint carried by a
/// stacked column header.
pub(super) fn unpivot(
    grid: &RawGrid,
    header_rows: usize,
    names: Option<&CrossNames>,
) -> (Vec<String>, Vec<Vec<String>>, Option<HierarchyHint>) {
    let n_cols = grid.n_cols();
    let (mut row_dim, mut col_dims, mut value_name) = if header_rows == 1 {
        let corner = grid.text(0, 0);
        match corner.split_once('/') {
            Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                (a.trim().to_string(), vec![b.trim().to_string()], "value".to_string())
            }
            _ => ("row".to_string(), vec!["column".to_string()], "value".to_string()),
        }
    } else {
        let dims = (0..header_rows)
            .map(|r| {
                let n = value::snake_name(grid.text(r, 0));
                if n.is_empty() {
                    format!("column_{}", r + 1)
                } else {
                    n
                }
            })
            .collect();
        ("row".to_string(), dims, "value".to_string())
    };
    if let Some(n) = names {
        row_dim.clone_from(&n.row_dim);
        *col_dims.last_mut().expect("at least one level") = n.col_dim.clone();
        value_name.clone_from(&n.value);
    }
    let mut header = vec![row_dim];
    header.extend(col_dims.iter().cloned());
    header.push(value_name);
    let header = repair_names(&header);

    let labels = classify::stacked_labels(grid, header_rows, 1..n_cols);
    let mut rows = Vec::new();
    for r in header_rows..grid.n_rows() {
        for c in 1..n_cols {
            let v = grid.text(r, c);
            if v.is_empty() {
                continue;
            }
            let mut tuple = vec![grid.text(r, 0).to_string()];
            tuple.extend(labels[c - 1].iter().cloned());
            tuple.push(v.to_string());
            rows.push(tuple);
        }
    }
    let hint = (header_rows >= 2).then(|| HierarchyHint {
        levels: header[1..=header_rows].to_vec(),
    });
    (header, rows, hint)
}

enum Multi {
    Simple,
    Composed(usize),
}

/// Splits multivalued cells of a grid whose first row is its header: values
/// of one domain duplicate the row, values of mixed domains split the column
/// into `name_1..name_k` appended at the end.
pub fn explode_multivalued(grid: &RawGrid, delimiters: &[char]) -> Result<RawGrid, TransformError> {
    explode(grid, 1, delimiters)
}

fn explode(grid: &RawGrid, header_rows: usize, delimiters: &[char]) -> Result<RawGrid, TransformError> {
    let text = grid.to_text_rows();
    let n_cols = grid.n_cols();
    let header: Vec<String> = if header_rows > 0 {
        text[header_rows - 1].clone()
    } else {
        vec![String::new(); n_cols]
    };
    let body = &text[header_rows..];

    let mut kinds: Vec<Option<Multi>> = Vec::with_capacity(n_cols);
    for c in 0..n_cols {
        let mut kind = None;
        for row in body {
            if let Some(parts) = classify::multivalue_parts(&row[c], delimiters) {
                if classify::parts_share_type(&parts) {
                    kind.get_or_insert(Multi::Simple);
                } else {
                    kind = Some(Multi::Composed(0));
                    break;
                }
            }
        }
        if let Some(Multi::Composed(_)) = kind {
            // every multi-part cell must agree on the arity
            let mut arity = None;
            for row in body {
                if let Some(parts) = classify::multivalue_parts(&row[c], delimiters) {
                    match arity {
                        None => arity = Some(parts.len()),
                        Some(k) if k != parts.len() => {
                            return Err(TransformError::InconsistentCompositeArity {
                                column: header[c].clone(),
                                expected: k,
                                found: parts.len(),
                            })
                        }
                        _ => {}
                    }
                }
            }
            kind = Some(Multi::Composed(arity.unwrap_or(1)));
        }
        kinds.push(kind);
    }
    if kinds.iter().all(Option::is_none) {
        return Ok(grid.clone());
    }

    let kept: Vec<usize> = (0..n_cols)
        .filter(|&c| !matches!(kinds[c], Some(Multi::Composed(_))))
        .collect();
    let composed: Vec<(usize, usize)> = (0..n_cols)
        .filter_map(|c| match kinds[c] {
            Some(Multi::Composed(k)) => Some((c, k)),
            _ => None,
        })
        .collect();
    let simple_positions: Vec<usize> = kept
        .iter()
        .enumerate()
        .filter(|(_, &c)| matches!(kinds[c], Some(Multi::Simple)))
        .map(|(pos, _)| pos)
        .collect();

    let reshape = |row: &[String], is_header: bool| -> Vec<String> {
        let mut out: Vec<String> = kept.iter().map(|&c| row[c].clone()).collect();
        for &(c, k) in &composed {
            if is_header {
                out.extend((1..=k).map(|i| {
                    if row[c].is_empty() {
                        String::new()
                    } else {
                        format!("{}_{i}", row[c])
                    }
                }));
            } else {
                let parts = classify::multivalue_parts(&row[c], delimiters)
                    .unwrap_or_else(|| vec![row[c].as_str()]);
                out.extend((0..k).map(|i| parts.get(i).map_or(String::new(), |p| p.to_string())));
            }
        }
        out
    };

    let mut out: Vec<Vec<String>> = Vec::new();
    for row in &text[..header_rows] {
        out.push(reshape(row, true));
    }
    for row in body {
        let base = reshape(row, false);
        let mut expanded = vec![base];
        for &pos in &simple_positions {
            expanded = expanded
                .into_iter()
                .flat_map(|r| match classify::multivalue_parts(&r[pos], delimiters) {
                    Some(parts) => parts
                        .into_iter()
                        .map(|p| {
                            let mut copy = r.clone();
                            copy[pos] = p.to_string();
                            copy
                        })
                        .collect::<Vec<_>>(),
                    None => vec![r],
                })
                .collect();
        }
        out.extend(expanded);
    }
    text_rows_to_grid(grid, out)
}

/// Prepends a `col_1..col_n` header row.
pub fn synthesize_header(grid: &RawGrid) -> RawGrid {
    let mut cells = vec![(1..=grid.n_cols())
        .map(|i| Cell::new(format!("col_{i}")))
        .collect::<Vec<_>>()];
    cells.extend(grid.rows().iter().cloned());
    grid.with_cells(cells)
}
