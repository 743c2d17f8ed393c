//! Column typing and measure selection.

use std::collections::{BTreeSet, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::table::CanonicalTable;
use crate::value;

pub mod formula;
mod overrides;

pub use overrides::{apply_overrides, MeasureAction, MeasureOverride, OverrideDocument};

/// Share of non-empty cells that must parse as numbers for a numeric kind.
pub const NUMERIC_MIN: f64 = 0.95;
/// Nominal columns repeat values: distinct count at most this share of rows.
pub const NOMINAL_DISTINCT_RATIO: f64 = 0.5;
pub const ROW_COUNT: &str = "row_count";

static ID_NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(^|[_ ])id($|[_ ])|^id|id$").expect("static pattern"));

const BOOLEAN_WORDS: [&str; 6] = ["0", "1", "true", "false", "yes", "no"];

const ORDINAL_SCALES: &[&[&str]] = &[
    &["low", "medium", "high"],
    &["very low", "low", "medium", "high", "very high"],
    &["small", "medium", "large"],
    &["xs", "s", "m", "l", "xl", "xxl"],
    &["bad", "average", "good"],
    &["poor", "fair", "good", "very good", "excellent"],
    &["never", "rarely", "sometimes", "often", "always"],
    &["strongly disagree", "disagree", "neutral", "agree", "strongly agree"],
    &["bronze", "silver", "gold", "platinum"],
    &["beginner", "intermediate", "advanced", "expert"],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Identifier,
    Boolean,
    Nominal,
    Ordinal,
    Interval,
    Ratio,
    TemporalYear,
    TemporalDate,
    Text,
}

impl Kind {
    pub fn is_measure_kind(self) -> bool {
        matches!(self, Kind::Interval | Kind::Ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub attribute: String,
    pub index: usize,
    pub kind: Kind,
    pub distinct_count: usize,
    pub null_count: usize,
    pub numeric_fraction: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Sum,
    Avg,
    Min,
    Max,
    Count,
}

impl Aggregation {
    pub const BASIC: [Aggregation; 4] = [
        Aggregation::Sum,
        Aggregation::Avg,
        Aggregation::Min,
        Aggregation::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Sum => "sum",
            Aggregation::Avg => "avg",
            Aggregation::Min => "min",
            Aggregation::Max => "max",
            Aggregation::Count => "count",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    #[default]
    Auto,
    User,
}

/// A measure of the fact. `source` is the attribute it reads; derived
/// measures carry a formula instead, and `row_count` has neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub name: String,
    pub source: Option<String>,
    pub aggregations: BTreeSet<Aggregation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default)]
    pub origin: Origin,
}

impl MeasureSpec {
    pub fn row_count() -> Self {
        MeasureSpec {
            name: ROW_COUNT.to_string(),
            source: None,
            aggregations: BTreeSet::from([Aggregation::Count]),
            formula: None,
            origin: Origin::Auto,
        }
    }

    fn auto(attribute: &str) -> Self {
        MeasureSpec {
            name: attribute.to_string(),
            source: Some(attribute.to_string()),
            aggregations: Aggregation::BASIC.into_iter().collect(),
            formula: None,
            origin: Origin::Auto,
        }
    }

    /// Attributes this measure reads.
    pub fn inputs(&self) -> BTreeSet<String> {
        match (&self.source, &self.formula) {
            (Some(s), _) => BTreeSet::from([s.clone()]),
            (None, Some(f)) => formula::parse(f)
                .map(|e| e.references().into_iter().map(str::to_string).collect())
                .unwrap_or_default(),
            (None, None) => BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("no candidate measures")]
    NoCandidateMeasures,
    #[error("formula for `{measure}` references unknown attribute `{attribute}`")]
    UnknownAttributeInFormula { measure: String, attribute: String },
    #[error("formula for `{measure}` references non-numeric attribute `{attribute}`")]
    NonNumericAttributeInFormula { measure: String, attribute: String },
    #[error("malformed formula for `{measure}`: {message} at offset {offset}")]
    MalformedFormula {
        measure: String,
        offset: usize,
        message: String,
    },
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("measure name `{0}` is already taken")]
    DuplicateMeasure(String),
    #[error("invalid override document: {0}")]
    InvalidOverride(String),
}

fn is_id_name(name: &str) -> bool {
    ID_NAME.is_match(name)
}

fn is_year(text: &str) -> bool {
    text.len() == 4
        && text.bytes().all(|b| b.is_ascii_digit())
        && (1300..=2100).contains(&text.parse::<u32>().unwrap_or(0))
}

fn ordinal_scale(distinct: &HashSet<String>) -> bool {
    distinct.len() >= 2
        && ORDINAL_SCALES
            .iter()
            .any(|scale| distinct.iter().all(|v| scale.contains(&v.as_str())))
}

pub fn profile_column(table: &CanonicalTable, attribute: &str) -> Result<ColumnProfile, ProfileError> {
    let index = table
        .index_of(attribute)
        .map_err(|_| ProfileError::UnknownAttribute(attribute.to_string()))?;
    let values: Vec<&str> = table.column(index).filter(|v| !v.is_empty()).collect();
    let n_rows = table.n_rows();
    let null_count = n_rows - values.len();
    let distinct: HashSet<&str> = values.iter().copied().collect();
    let numbers: Vec<f64> = values.iter().filter_map(|v| value::parse_number(v)).collect();
    let numeric_fraction = if values.is_empty() {
        0.0
    } else {
        numbers.len() as f64 / values.len() as f64
    };
    let min = numbers.iter().copied().reduce(f64::min);
    let max = numbers.iter().copied().reduce(f64::max);

    let integers: Option<Vec<i64>> = values.iter().map(|v| value::parse_integer(v)).collect();
    let kind = if values.is_empty() {
        Kind::Text
    } else if values
        .iter()
        .all(|v| BOOLEAN_WORDS.contains(&v.to_ascii_lowercase().as_str()))
    {
        Kind::Boolean
    } else if integers.as_ref().is_some_and(|ints| {
        let unique = distinct.len() == values.len();
        let years = values.iter().all(|v| is_year(v));
        is_id_name(attribute) || (unique && !years && (is_dense(ints) || is_sorted(ints)))
    }) {
        Kind::Identifier
    } else if values.iter().all(|v| is_year(v)) {
        Kind::TemporalYear
    } else if values.iter().all(|v| value::parse_date(v).is_some()) {
        Kind::TemporalDate
    } else if numeric_fraction >= NUMERIC_MIN {
        if min.is_some_and(|m| m >= 0.0) {
            Kind::Ratio
        } else {
            Kind::Interval
        }
    } else if ordinal_scale(&distinct.iter().map(|v| v.to_lowercase()).collect()) {
        Kind::Ordinal
    } else if distinct.len() as f64 <= NOMINAL_DISTINCT_RATIO * n_rows as f64 {
        Kind::Nominal
    } else {
        Kind::Text
    };

    Ok(ColumnProfile {
        attribute: attribute.to_string(),
        index,
        kind,
        distinct_count: distinct.len(),
        null_count,
        numeric_fraction,
        min,
        max,
    })
}

fn is_dense(ints: &[i64]) -> bool {
    match (ints.iter().min(), ints.iter().max()) {
        (Some(lo), Some(hi)) => (hi - lo) as u128 + 1 == ints.len() as u128,
        _ => false,
    }
}

fn is_sorted(ints: &[i64]) -> bool {
    ints.len() >= 2 && ints.windows(2).all(|w| w[0] < w[1])
}

/// Profiles every attribute, in column order.
pub fn profile_table(table: &CanonicalTable) -> Vec<ColumnProfile> {
    table
        .attributes()
        .iter()
        .map(|a| profile_column(table, a).expect("attribute from the table"))
        .collect()
}

/// Interval and ratio columns, in column order, followed by `row_count`.
pub fn select_measures(profiles: &[ColumnProfile]) -> Vec<MeasureSpec> {
    let mut out: Vec<MeasureSpec> = profiles
        .iter()
        .filter(|p| p.kind.is_measure_kind())
        .map(|p| MeasureSpec::auto(&p.attribute))
        .collect();
    out.push(MeasureSpec::row_count());
    out
}

/// Attributes read by the measures, which stay out of dependency mining.
pub fn measure_attributes(measures: &[MeasureSpec]) -> BTreeSet<String> {
    measures
        .iter()
        .filter(|m| m.formula.is_none())
        .filter_map(|m| m.source.clone())
        .collect()
}
