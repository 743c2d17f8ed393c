use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use super::{MultidimensionalSchema, SchemaError};
use crate::profile::{formula, Aggregation, MeasureSpec};
use crate::table::{write_csv, CanonicalTable};
use crate::value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl StarTable {
    pub fn to_csv(&self) -> String {
        write_csv(&self.columns, &self.rows)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarSchema {
    pub dimensions: Vec<StarTable>,
    pub fact: StarTable,
    pub ddl: String,
}

impl StarSchema {
    /// Writes one CSV per table and `schema.sql`; returns the written paths.
    pub fn write_dir(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in self.dimensions.iter().chain(std::iter::once(&self.fact)) {
            let path = dir.join(format!("{}.csv", file_stem(&t.name)));
            std::fs::write(&path, t.to_csv())?;
            written.push(path);
        }
        let path = dir.join("schema.sql");
        std::fs::write(&path, &self.ddl)?;
        written.push(path);
        Ok(written)
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn quote(ident: &str) -> String {
    format!("\"{}\"", ident.replace('"', "\"\""))
}

/// Fact column for one aggregation of a measure: the measure name alone when
/// it has a single aggregation, `<name>_<agg>` otherwise.
pub(crate) fn fact_column(m: &MeasureSpec, agg: Aggregation) -> String {
    if m.aggregations.len() == 1 {
        m.name.clone()
    } else {
        format!("{}_{}", m.name, agg.name())
    }
}

#[derive(Default, Clone)]
struct Acc {
    count: u64,
    sum: f64,
    min: Option<f64>,
    max: Option<f64>,
}

impl Acc {
    fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.min = Some(self.min.map_or(v, |m| m.min(v)));
        self.max = Some(self.max.map_or(v, |m| m.max(v)));
    }

    fn get(&self, agg: Aggregation) -> String {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        match agg {
            Aggregation::Count => self.count.to_string(),
            Aggregation::Sum => num((self.count > 0).then_some(self.sum)),
            Aggregation::Avg => num((self.count > 0).then(|| self.sum / self.count as f64)),
            Aggregation::Min => num(self.min),
            Aggregation::Max => num(self.max),
        }
    }
}

enum Reader {
    Rows,
    Column(usize, bool),
    Formula(formula::Expr, Vec<(String, usize)>),
}

fn reader(m: &MeasureSpec, table: &CanonicalTable) -> Result<Reader, SchemaError> {
    let index = |a: &str| table.index_of(a).map_err(|_| SchemaError::UnknownAttribute(a.to_string()));
    match (&m.formula, &m.source) {
        (Some(text), _) => {
            let expr = formula::parse(text).map_err(|e| {
                SchemaError::InvariantViolation(format!("formula of `{}`: {e}", m.name))
            })?;
            let refs = expr
                .references()
                .into_iter()
                .map(|a| Ok((a.to_string(), index(a)?)))
                .collect::<Result<Vec<_>, SchemaError>>()?;
            Ok(Reader::Formula(expr, refs))
        }
        (None, Some(src)) => {
            let numeric = m.aggregations.iter().any(|a| *a != Aggregation::Count);
            Ok(Reader::Column(index(src)?, numeric))
        }
        (None, None) => Ok(Reader::Rows),
    }
}

/// Fills one dimension table per dimension (one row per root value, first
/// occurrence wins) and a fact table grouped by the tuple of all roots.
pub fn populate_star(
    schema: &MultidimensionalSchema,
    table: &CanonicalTable,
) -> Result<StarSchema, SchemaError> {
    let index = |a: &str| table.index_of(a).map_err(|_| SchemaError::UnknownAttribute(a.to_string()));

    let mut dimensions = Vec::new();
    for d in &schema.dimensions {
        let cols: Vec<usize> = d.attributes.iter().map(|a| index(a)).collect::<Result<_, _>>()?;
        let root = index(&d.root)?;
        let mut seen: HashSet<&str> = HashSet::new();
        let mut rows = Vec::new();
        for r in table.rows() {
            if seen.insert(r[root].as_str()) {
                rows.push(cols.iter().map(|&c| r[c].clone()).collect());
            }
        }
        dimensions.push(StarTable {
            name: d.name.clone(),
            columns: d.attributes.clone(),
            rows,
        });
    }

    let roots: Vec<usize> = schema.dimensions.iter().map(|d| index(&d.root)).collect::<Result<_, _>>()?;
    let readers: Vec<Reader> = schema
        .fact
        .measures
        .iter()
        .map(|m| reader(m, table))
        .collect::<Result<_, _>>()?;

    let mut keys: Vec<Vec<&str>> = Vec::new();
    let mut slot: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut accs: Vec<Vec<Acc>> = Vec::new();
    for (i, r) in table.rows().iter().enumerate() {
        let key: Vec<&str> = roots.iter().map(|&c| r[c].as_str()).collect();
        let g = *slot.entry(key.clone()).or_insert_with(|| {
            keys.push(key);
            accs.push(vec![Acc::default(); readers.len()]);
            keys.len() - 1
        });
        for (m, (rd, spec)) in readers.iter().zip(&schema.fact.measures).enumerate() {
            let acc = &mut accs[g][m];
            match rd {
                Reader::Rows => acc.push(0.0),
                Reader::Column(c, numeric) => {
                    let cell = r[*c].as_str();
                    if cell.is_empty() {
                        continue;
                    }
                    match value::parse_number(cell) {
                        Some(v) => acc.push(v),
                        None if *numeric => {
                            return Err(SchemaError::NonNumericMeasureValue {
                                measure: spec.name.clone(),
                                row: i,
                                value: cell.to_string(),
                            })
                        }
                        None => acc.push(0.0),
                    }
                }
                Reader::Formula(expr, refs) => {
                    let lookup = |name: &str| {
                        refs.iter()
                            .find(|(a, _)| a == name)
                            .and_then(|(_, c)| value::parse_number(&r[*c]))
                    };
                    if let Some(v) = expr.eval(&lookup) {
                        acc.push(v);
                    }
                }
            }
        }
    }

    let mut columns: Vec<String> = schema.dimensions.iter().map(|d| d.root.clone()).collect();
    for m in &schema.fact.measures {
        columns.extend(m.aggregations.iter().map(|a| fact_column(m, *a)));
    }
    let rows = keys
        .iter()
        .zip(&accs)
        .map(|(key, acc)| {
            let mut row: Vec<String> = key.iter().map(|k| k.to_string()).collect();
            for (m, a) in schema.fact.measures.iter().zip(acc) {
                row.extend(m.aggregations.iter().map(|agg| a.get(*agg)));
            }
            row
        })
        .collect();
    let fact = StarTable {
        name: schema.fact.name.clone(),
        columns,
        rows,
    };
    let ddl = ddl(schema, &fact);
    Ok(StarSchema { dimensions, fact, ddl })
}

fn ddl(schema: &MultidimensionalSchema, fact: &StarTable) -> String {
    let mut out = String::new();
    for d in &schema.dimensions {
        let _ = writeln!(out, "CREATE TABLE {} (", quote(&d.name));
        for a in &d.attributes {
            let null = if *a == d.root { " NOT NULL" } else { "" };
            let _ = writeln!(out, "  {} VARCHAR(255){null},", quote(a));
        }
        let _ = writeln!(out, "  PRIMARY KEY ({})\n);\n", quote(&d.root));
    }
    let _ = writeln!(out, "CREATE TABLE {} (", quote(&fact.name));
    for d in &schema.dimensions {
        let _ = writeln!(out, "  {} VARCHAR(255) NOT NULL,", quote(&d.root));
    }
    for m in &schema.fact.measures {
        for agg in &m.aggregations {
            let ty = if *agg == Aggregation::Count { "BIGINT" } else { "DOUBLE PRECISION" };
            let _ = writeln!(out, "  {} {ty},", quote(&fact_column(m, *agg)));
        }
    }
    let keys: Vec<String> = schema.dimensions.iter().map(|d| quote(&d.root)).collect();
    let _ = write!(out, "  PRIMARY KEY ({})", keys.join(", "));
    for d in &schema.dimensions {
        let _ = write!(
            out,
            ",\n  FOREIGN KEY ({}) REFERENCES {} ({})",
            quote(&d.root),
            quote(&d.name),
            quote(&d.root)
        );
    }
    out.push_str("\n);\n");
    out
}
