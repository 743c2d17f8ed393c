//! Lexical typing of cell text.
//!
//! Every heuristic in the crate (header detection, orientation, profiling)
//! works from the same small set of inferred value types so that decisions
//! stay consistent between stages.

use chrono::NaiveDate;

/// Inferred type of a single cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Empty,
    Integer,
    Float,
    Date,
    Boolean,
    Text,
}

impl ValueType {
    /// Collapses integer and float into one numeric class.
    pub fn coarse(self) -> CoarseType {
        match self {
            ValueType::Empty => CoarseType::Empty,
            ValueType::Integer | ValueType::Float => CoarseType::Numeric,
            ValueType::Date => CoarseType::Date,
            ValueType::Boolean => CoarseType::Boolean,
            ValueType::Text => CoarseType::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoarseType {
    Empty,
    Numeric,
    Date,
    Boolean,
    Text,
}

pub fn infer_type(text: &str) -> ValueType {
    let t = text.trim();
    if t.is_empty() {
        ValueType::Empty
    } else if parse_integer(t).is_some() {
        ValueType::Integer
    } else if parse_number(t).is_some() {
        ValueType::Float
    } else if parse_date(t).is_some() {
        ValueType::Date
    } else if matches!(t.to_ascii_lowercase().as_str(), "true" | "false" | "yes" | "no") {
        ValueType::Boolean
    } else {
        ValueType::Text
    }
}

pub fn is_numeric(text: &str) -> bool {
    parse_number(text).is_some()
}

pub fn parse_integer(text: &str) -> Option<i64> {
    let t = text.trim();
    let digits = t.strip_prefix(['+', '-']).unwrap_or(t);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    t.parse().ok()
}

/// Parses a decimal number. `,` is accepted as the decimal separator when the
/// text holds no `.` and exactly one `,`.
pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    if !t
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b',' | b'e' | b'E'))
    {
        return None;
    }
    if !t.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    let normalized;
    let candidate = if t.contains(',') {
        if t.contains('.') || t.matches(',').count() != 1 {
            return None;
        }
        normalized = t.replace(',', ".");
        normalized.as_str()
    } else {
        t
    };
    candidate.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// ISO-8601 (`YYYY-MM-DD`, optionally with a time part) or `DD/MM/YYYY`.
pub fn parse_date(text: &str) -> Option<NaiveDate> {
    let t = text.trim();
    if t.len() < 8 {
        return None;
    }
    let date_part = match t.find(['T', ' ']) {
        Some(i) if t.as_bytes().get(4) == Some(&b'-') => &t[..i],
        _ => t,
    };
    NaiveDate::parse_from_str(date_part, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(date_part, "%d/%m/%Y"))
        .ok()
}

/// Fraction of the non-empty values that belong to the majority type, or
/// `None` when every value is empty.
pub fn homogeneity<'a, I, F, K>(values: I, key: F) -> Option<f64>
where
    I: IntoIterator<Item = &'a str>,
    F: Fn(&str) -> Option<K>,
    K: Ord,
{
    let mut counts = std::collections::BTreeMap::new();
    let mut total = 0usize;
    for v in values {
        if let Some(k) = key(v) {
            *counts.entry(k).or_insert(0usize) += 1;
            total += 1;
        }
    }
    let best = counts.values().copied().max()?;
    Some(best as f64 / total as f64)
}

/// Fine-grained type key, skipping empty cells.
pub fn fine_key(v: &str) -> Option<ValueType> {
    match infer_type(v) {
        ValueType::Empty => None,
        t => Some(t),
    }
}

/// Coarse type key, skipping empty cells.
pub fn coarse_key(v: &str) -> Option<CoarseType> {
    match infer_type(v).coarse() {
        CoarseType::Empty => None,
        t => Some(t),
    }
}

/// Lowercases, replaces whitespace runs with `_`.
pub fn snake_name(label: &str) -> String {
    label
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
        .to_lowercase()
}
