//! Minimal HTML table reader: `table`, `tr`, `td`, `th` with `rowspan` and
//! `colspan`. Everything else is treated as text or ignored.

use crate::grid::{Cell, RawGrid};

#[derive(Debug, Default)]
struct PendingCell {
    text: String,
    row_span: usize,
    col_span: usize,
    nested: bool,
}

#[derive(Debug, Default)]
struct TableBuilder {
    rows: Vec<Vec<PendingCell>>,
    row_open: bool,
    cell_open: bool,
}

impl TableBuilder {
    fn close_cell(&mut self) {
        self.cell_open = false;
    }

    fn close_row(&mut self) {
        self.close_cell();
        self.row_open = false;
    }

    fn open_cell(&mut self, row_span: usize, col_span: usize) {
        self.close_cell();
        if !self.row_open {
            self.rows.push(Vec::new());
            self.row_open = true;
        }
        self.rows.last_mut().unwrap().push(PendingCell {
            row_span,
            col_span,
            ..Default::default()
        });
        self.cell_open = true;
    }

    fn current_cell(&mut self) -> Option<&mut PendingCell> {
        if self.cell_open {
            self.rows.last_mut().and_then(|r| r.last_mut())
        } else {
            None
        }
    }

    fn plain_text(&self) -> String {
        self.rows
            .iter()
            .flatten()
            .map(|c| c.text.trim())
            .filter(|t| !t.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Lays cells out on a dense grid, replicating spanned values into every
    /// covered position.
    fn layout(self, source_name: &str) -> Option<RawGrid> {
        let n_rows = self.rows.len();
        let mut slots: Vec<Vec<Option<Cell>>> = vec![Vec::new(); n_rows];
        for (r, row) in self.rows.into_iter().enumerate() {
            let mut c = 0;
            for pending in row {
                while slots[r].get(c).is_some_and(Option::is_some) {
                    c += 1;
                }
                let row_span = pending.row_span.min(n_rows - r);
                let cell = Cell {
                    nested: pending.nested,
                    ..Cell::new(collapse_whitespace(&pending.text))
                        .with_span(pending.row_span, pending.col_span)
                };
                for slot_row in slots.iter_mut().skip(r).take(row_span) {
                    if slot_row.len() < c + pending.col_span {
                        slot_row.resize(c + pending.col_span, None);
                    }
                    for slot in &mut slot_row[c..c + pending.col_span] {
                        *slot = Some(cell.clone());
                    }
                }
                c += pending.col_span;
            }
        }
        let n_cols = slots.iter().map(Vec::len).max().unwrap_or(0);
        let cells: Vec<Vec<Cell>> = slots
            .into_iter()
            .map(|row| {
                let mut row: Vec<Cell> = row.into_iter().map(|s| s.unwrap_or_else(Cell::empty)).collect();
                row.resize_with(n_cols, Cell::empty);
                row
            })
            .collect();
        RawGrid::new(cells, source_name).ok()
    }
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let Some(semi) = rest[..rest.len().min(12)].find(';') else {
            out.push('&');
            rest = &rest[1..];
            continue;
        };
        let entity = &rest[1..semi];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some(' '),
            _ => entity
                .strip_prefix("#x")
                .or_else(|| entity.strip_prefix("#X"))
                .and_then(|h| u32::from_str_radix(h, 16).ok())
                .or_else(|| entity.strip_prefix('#').and_then(|d| d.parse().ok()))
                .and_then(char::from_u32),
        };
        match decoded {
            Some(c) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

struct Tag<'a> {
    name: String,
    closing: bool,
    attrs: &'a str,
}

fn parse_tag(inner: &str) -> Tag<'_> {
    let inner = inner.trim();
    let (closing, body) = match inner.strip_prefix('/') {
        Some(b) => (true, b.trim_start()),
        None => (false, inner),
    };
    let end = body
        .find(|c: char| c.is_whitespace() || c == '/')
        .unwrap_or(body.len());
    Tag {
        name: body[..end].to_ascii_lowercase(),
        closing,
        attrs: &body[end..],
    }
}

fn span_attr(attrs: &str, name: &str) -> usize {
    let lower = attrs.to_ascii_lowercase();
    let mut search = 0;
    while let Some(pos) = lower[search..].find(name) {
        let at = search + pos;
        search = at + name.len();
        let before_ok = at == 0 || !lower.as_bytes()[at - 1].is_ascii_alphanumeric();
        let rest = lower[search..].trim_start();
        if !before_ok || !rest.starts_with('=') {
            continue;
        }
        let value = rest[1..].trim_start().trim_start_matches(['"', '\'']);
        let digits: String = value.chars().take_while(char::is_ascii_digit).collect();
        return digits.parse().ok().filter(|&n| n >= 1).unwrap_or(1);
    }
    1
}

pub(super) fn read_html(text: &str, source_name: &str) -> Vec<RawGrid> {
    let mut grids = Vec::new();
    let mut stack: Vec<TableBuilder> = Vec::new();
    let mut rest = text;
    let mut skip_until: Option<&'static str> = None;

    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            push_text(&mut stack, rest);
            break;
        };
        if skip_until.is_none() {
            push_text(&mut stack, &rest[..lt]);
        }
        rest = &rest[lt..];
        if rest.starts_with("<!--") {
            rest = rest.find("-->").map_or("", |e| &rest[e + 3..]);
            continue;
        }
        let Some(gt) = rest.find('>') else {
            break;
        };
        let tag = parse_tag(&rest[1..gt]);
        rest = &rest[gt + 1..];

        if let Some(end) = skip_until {
            if tag.closing && tag.name == end {
                skip_until = None;
            }
            continue;
        }
        match (tag.name.as_str(), tag.closing) {
            ("script", false) => skip_until = Some("script"),
            ("style", false) => skip_until = Some("style"),
            ("table", false) => {
                if let Some(cell) = stack.last_mut().and_then(TableBuilder::current_cell) {
                    cell.nested = true;
                }
                stack.push(TableBuilder::default());
            }
            ("table", true) => {
                let Some(done) = stack.pop() else { continue };
                match stack.last_mut() {
                    Some(parent) => {
                        let inner = done.plain_text();
                        if let Some(cell) = parent.current_cell() {
                            cell.text.push(' ');
                            cell.text.push_str(&inner);
                        }
                    }
                    None => grids.extend(done.layout(source_name)),
                }
            }
            ("tr", false) => {
                if let Some(t) = stack.last_mut() {
                    t.close_row();
                    t.rows.push(Vec::new());
                    t.row_open = true;
                }
            }
            ("tr", true) => {
                if let Some(t) = stack.last_mut() {
                    t.close_row();
                }
            }
            ("td" | "th", false) => {
                if let Some(t) = stack.last_mut() {
                    t.open_cell(span_attr(tag.attrs, "rowspan"), span_attr(tag.attrs, "colspan"));
                }
            }
            ("td" | "th", true) => {
                if let Some(t) = stack.last_mut() {
                    t.close_cell();
                }
            }
            ("br" | "p" | "div" | "li", _) => push_text(&mut stack, " "),
            _ => {}
        }
    }
    // Unterminated tables still count.
    while let Some(done) = stack.pop() {
        if stack.is_empty() {
            grids.extend(done.layout(source_name));
        }
    }
    grids
        .into_iter()
        .enumerate()
        .map(|(i, mut g)| {
            if i > 0 {
                g.source_name = format!("{source_name}#{i}");
            }
            g
        })
        .collect()
}

fn push_text(stack: &mut [TableBuilder], text: &str) {
    if let Some(cell) = stack.last_mut().and_then(TableBuilder::current_cell) {
        cell.text.push_str(&decode_entities(text));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colspan_is_replicated() {
        let grids = read_html(
            "<table><tr><td colspan=\"2\">Total</td></tr><tr><td>1</td><td>2</td></tr></table>",
            "t",
        );
        assert_eq!(grids.len(), 1);
        let g = &grids[0];
        assert_eq!((g.n_rows(), g.n_cols()), (2, 2));
        assert_eq!(g.text(0, 0), "Total");
        assert_eq!(g.text(0, 1), "Total");
        assert_eq!(g.cell(0, 1).col_span, 2);
        assert_eq!(g.cell(1, 1).col_span, 1);
    }

    #[test]
    fn rowspan_shifts_following_cells() {
        let g = &read_html(
            "<table><tr><th rowspan=2>Region</th><th>a</th></tr><tr><td>b</td></tr>\
             <tr><td>x</td><td>y</td></tr></table>",
            "t",
        )[0];
        assert_eq!(g.row_texts(1), vec!["Region", "b"]);
        assert_eq!(g.row_texts(2), vec!["x", "y"]);
    }

    #[test]
    fn implied_closings_entities_and_nesting() {
        let grids = read_html(
            "<html><body><p>intro</p><table><tr><td>A &amp; B<td>x&#65;<tr><td>\
             <table><tr><td>in</td></tr></table></td><td>z</td></table>\
             <table><tr><td>second</td></tr></table></body></html>",
            "t",
        );
        assert_eq!(grids.len(), 2);
        assert_eq!(grids[0].row_texts(0), vec!["A & B", "xA"]);
        assert!(grids[0].cell(1, 0).nested);
        assert_eq!(grids[0].text(1, 0), "in");
        assert_eq!(grids[1].source_name, "t#1");
    }
}
