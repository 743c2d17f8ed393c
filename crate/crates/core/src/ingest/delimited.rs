use std::collections::BTreeMap;

use super::{Decoded, IngestError};
use crate::grid::{Cell, Dialect, RawGrid};

/// Candidate field delimiters in tie-break preference order.
pub const DELIMITER_CANDIDATES: [char; 4] = [',', ';', '\t', '|'];

const SNIFF_LINES: usize = 20;
const QUOTE: char = '"';

/// RFC-4180 record reader that, unlike most CSV readers, keeps blank lines:
/// they separate stacked tables.
struct Records<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    delimiter: char,
}

impl<'a> Records<'a> {
    fn new(text: &'a str, delimiter: char) -> Self {
        Records {
            chars: text.chars().peekable(),
            delimiter,
        }
    }
}

impl Iterator for Records<'_> {
    type Item = Vec<String>;

    fn next(&mut self) -> Option<Vec<String>> {
        self.chars.peek()?;
        let mut record = Vec::new();
        let mut field = String::new();
        let mut in_quotes = false;
        while let Some(c) = self.chars.next() {
            if in_quotes {
                if c == QUOTE {
                    if self.chars.peek() == Some(&QUOTE) {
                        field.push(QUOTE);
                        self.chars.next();
                    } else {
                        in_quotes = false;
                    }
                } else {
                    field.push(c);
                }
            } else if c == QUOTE && field.trim().is_empty() {
                field.clear();
                in_quotes = true;
            } else if c == self.delimiter {
                record.push(std::mem::take(&mut field));
            } else if c == '\n' || c == '\r' {
                if c == '\r' && self.chars.peek() == Some(&'\n') {
                    self.chars.next();
                }
                record.push(field);
                return Some(record);
            } else {
                field.push(c);
            }
        }
        record.push(field);
        Some(record)
    }
}

fn is_blank(record: &[String]) -> bool {
    record.iter().all(|f| f.trim().is_empty())
}

/// Most frequent value; ties go to the larger value.
fn mode(values: &[usize]) -> Option<(usize, usize)> {
    let mut counts = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
}

/// Picks the delimiter whose per-line field count is most consistent over
/// the first lines. Delimiters that never split a line are not candidates.
pub fn sniff_delimiter(text: &str) -> char {
    let mut best: Option<(f64, char)> = None;
    for delimiter in DELIMITER_CANDIDATES {
        let widths: Vec<usize> = Records::new(text, delimiter)
            .filter(|r| !is_blank(r))
            .take(SNIFF_LINES)
            .map(|r| r.len())
            .collect();
        let Some((width, freq)) = mode(&widths) else {
            continue;
        };
        if width < 2 {
            continue;
        }
        let score = freq as f64 / widths.len() as f64;
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, delimiter));
        }
    }
    best.map(|(_, d)| d).unwrap_or(',')
}

fn effective_width(record: &[String]) -> usize {
    record
        .iter()
        .rposition(|f| !f.trim().is_empty())
        .map_or(0, |i| i + 1)
}

pub(super) fn read_delimited(
    decoded: &Decoded,
    forced: Option<char>,
    source_name: &str,
) -> Result<RawGrid, IngestError> {
    let delimiter = forced.unwrap_or_else(|| sniff_delimiter(&decoded.text));
    let records: Vec<Vec<String>> = Records::new(&decoded.text, delimiter).collect();

    // Each blank-separated block is padded to its own modal width; a row
    // carrying data beyond that width cannot be repaired by padding.
    let mut target = 0;
    let mut start = 0;
    while start < records.len() {
        if is_blank(&records[start]) {
            start += 1;
            continue;
        }
        let end = (start..records.len())
            .find(|&i| is_blank(&records[i]))
            .unwrap_or(records.len());
        let widths: Vec<usize> = records[start..end].iter().map(Vec::len).collect();
        let (block_width, _) = mode(&widths).expect("block is non-empty");
        for (i, r) in records[start..end].iter().enumerate() {
            let w = effective_width(r);
            if w > block_width {
                return Err(IngestError::RaggedRows {
                    line: start + i + 1,
                    found: r.len(),
                    expected: block_width,
                });
            }
        }
        let block_max = records[start..end]
            .iter()
            .map(|r| effective_width(r))
            .max()
            .unwrap_or(0);
        target = target.max(block_max);
        start = end;
    }
    if target == 0 {
        return Err(IngestError::EmptySource);
    }

    // Trailing blank lines carry no information.
    let last = records.iter().rposition(|r| !is_blank(r)).unwrap_or(0);
    let cells: Vec<Vec<Cell>> = records[..=last]
        .iter()
        .map(|r| {
            let mut row: Vec<Cell> = r.iter().take(target).map(Cell::new).collect();
            row.resize_with(target, Cell::empty);
            row
        })
        .collect();
    let mut grid = RawGrid::new(cells, source_name).map_err(|_| IngestError::EmptySource)?;
    grid.dialect = Some(Dialect {
        field_delimiter: delimiter,
        quote_character: QUOTE,
        encoding: decoded.encoding,
        has_bom: decoded.has_bom,
    });
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Encoding;

    fn decoded(text: &str) -> Decoded {
        Decoded {
            text: text.to_string(),
            encoding: Encoding::Utf8,
            has_bom: false,
        }
    }

    #[test]
    fn records_keep_blank_lines_and_quotes() {
        let recs: Vec<_> = Records::new("a,\"b,\"\"c\"\"\"\r\n\nx,\"multi\nline\"", ',').collect();
        assert_eq!(
            recs,
            vec![
                vec!["a".to_string(), "b,\"c\"".to_string()],
                vec![String::new()],
                vec!["x".to_string(), "multi\nline".to_string()],
            ]
        );
    }

    #[test]
    fn sniffing() {
        assert_eq!(sniff_delimiter("a;b;c\n1;2;3\n"), ';');
        assert_eq!(sniff_delimiter("a\tb\n1\t2\n"), '\t');
        assert_eq!(sniff_delimiter("a|b\n1|2\n"), '|');
        // quoted commas do not count
        assert_eq!(sniff_delimiter("a;b\n\"1,5\";2\n\"3,5\";4\n"), ';');
        // equal consistency: preference order decides
        assert_eq!(sniff_delimiter("a,b;c\n1,2;3\n"), ',');
        // no delimiter at all
        assert_eq!(sniff_delimiter("paris\nlyon\n"), ',');
    }

    #[test]
    fn pads_short_rows_and_titles() {
        let g = read_delimited(&decoded("Report\n\na,b,c\n1,2\n"), None, "t").unwrap();
        assert_eq!((g.n_rows(), g.n_cols()), (4, 3));
        assert_eq!(g.text(3, 2), "");
        assert!(g.is_row_empty(1));
    }

    #[test]
    fn overlong_row_is_ragged() {
        let err = read_delimited(&decoded("a,b\n1,2\n3,4\n5,6,7\n"), None, "t").unwrap_err();
        assert!(matches!(err, IngestError::RaggedRows { line: 4, .. }));
        // trailing empty fields are harmless
        let g = read_delimited(&decoded("a,b\n1,2\n3,4,\n"), None, "t").unwrap();
        assert_eq!(g.n_cols(), 2);
    }

    #[test]
    fn csv_cells_never_span() {
        let g = read_delimited(&decoded("a,b\n1,2\n"), None, "t").unwrap();
        assert!(!g.has_spans());
    }
}
