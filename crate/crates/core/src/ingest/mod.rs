//! Reading tabular sources into raw grids.

mod delimited;
mod html;
mod split;

pub use delimited::{sniff_delimiter, DELIMITER_CANDIDATES};
pub use split::split_tables;

use crate::grid::{Encoding, RawGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatHint {
    Csv,
    Tsv,
    Html,
}

impl std::str::FromStr for FormatHint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(FormatHint::Csv),
            "tsv" => Ok(FormatHint::Tsv),
            "html" | "htm" => Ok(FormatHint::Html),
            other => Err(format!("unknown format `{other}` (expected csv, tsv or html)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("source is not readable as UTF-8 or Latin-1 text: {0}")]
    UnreadableSource(String),
    #[error("source contains no non-blank cell")]
    EmptySource,
    #[error("rows differ in width and padding cannot repair them (line {line}: {found} fields, expected {expected})")]
    RaggedRows {
        line: usize,
        found: usize,
        expected: usize,
    },
}

/// Decoded text plus what the decoder learned about it.
pub(crate) struct Decoded {
    pub text: String,
    pub encoding: Encoding,
    pub has_bom: bool,
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Decoded, IngestError> {
    if bytes.starts_with(&[0xFF, 0xFE]) || bytes.starts_with(&[0xFE, 0xFF]) {
        return Err(IngestError::UnreadableSource(
            "UTF-16 byte order mark".into(),
        ));
    }
    if let Some(rest) = bytes.strip_prefix(&[0xEF, 0xBB, 0xBF]) {
        let text = std::str::from_utf8(rest)
            .map_err(|e| IngestError::UnreadableSource(e.to_string()))?;
        return Ok(Decoded {
            text: text.to_string(),
            encoding: Encoding::Utf8,
            has_bom: true,
        });
    }
    if let Ok(text) = std::str::from_utf8(bytes) {
        return Ok(Decoded {
            text: text.to_string(),
            encoding: Encoding::Utf8,
            has_bom: false,
        });
    }
    // Latin-1 maps every byte, so binary data is rejected by its control bytes.
    if let Some(pos) = bytes
        .iter()
        .position(|&b| matches!(b, 0x00..=0x08 | 0x0E..=0x1F | 0x7F))
    {
        return Err(IngestError::UnreadableSource(format!(
            "control byte 0x{:02X} at offset {pos}",
            bytes[pos]
        )));
    }
    Ok(Decoded {
        text: bytes.iter().map(|&b| b as char).collect(),
        encoding: Encoding::Latin1,
        has_bom: false,
    })
}

fn looks_like_html(text: &str) -> bool {
    let head: String = text.chars().take(4096).collect::<String>().to_ascii_lowercase();
    head.contains("<table") || head.contains("<html")
}

/// Reads a byte source into one grid per table element (HTML) or one grid per
/// sheet (CSV/TSV). Multi-table sheets are separated by [`split_tables`].
pub fn read_source(
    bytes: &[u8],
    format_hint: Option<FormatHint>,
    source_name: &str,
) -> Result<Vec<RawGrid>, IngestError> {
    if bytes.is_empty() {
        return Err(IngestError::EmptySource);
    }
    let decoded = decode(bytes)?;
    let format = match format_hint {
        Some(f) => f,
        None if looks_like_html(&decoded.text) => FormatHint::Html,
        None => FormatHint::Csv,
    };
    let grids = match format {
        FormatHint::Html => html::read_html(&decoded.text, source_name),
        FormatHint::Csv => vec![delimited::read_delimited(&decoded, None, source_name)?],
        FormatHint::Tsv => vec![delimited::read_delimited(&decoded, Some('\t'), source_name)?],
    };
    let grids: Vec<RawGrid> = grids
        .into_iter()
        .filter(|g| g.non_empty_count() > 0)
        .collect();
    if grids.is_empty() {
        return Err(IngestError::EmptySource);
    }
    Ok(grids)
}
