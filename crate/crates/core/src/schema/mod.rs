//! Multidimensional schema: dependency graph, hierarchies, dimensions, fact.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::profile::MeasureSpec;

mod graph;
mod star;

pub use graph::{build_dependency_graph, extract_hierarchies, group_dimensions, DependencyGraph, GraphNode};
pub use star::{populate_star, StarSchema, StarTable};

pub const DEFAULT_FACT_NAME: &str = "F1";
pub const DEFAULT_SCHEMA_NAME: &str = "schema";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("schema invariant violated: {0}")]
    InvariantViolation(String),
    #[error("dimension name `{0}` is used twice")]
    DuplicateDimensionName(String),
    #[error("no dimension matches the name override key `{0}`")]
    UnknownDimension(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("measure `{measure}`: row {row} holds non-numeric value `{value}`")]
    NonNumericMeasureValue {
        measure: String,
        row: usize,
        value: String,
    },
    #[error("schema JSON: {0}")]
    Json(String),
}

fn violation(msg: impl Into<String>) -> SchemaError {
    SchemaError::InvariantViolation(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub parameter: String,
    pub weak_attributes: Vec<String>,
}

/// Levels run from the root (finest) to the coarsest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub name: String,
    pub levels: Vec<Level>,
}

impl Hierarchy {
    pub fn root(&self) -> &str {
        &self.levels[0].parameter
    }

    pub fn parameters(&self) -> impl Iterator<Item = &str> {
        self.levels.iter().map(|l| l.parameter.as_str())
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.levels.iter().flat_map(|l| {
            std::iter::once(l.parameter.as_str()).chain(l.weak_attributes.iter().map(String::as_str))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub root: String,
    pub attributes: Vec<String>,
    pub hierarchies: Vec<Hierarchy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub name: String,
    pub measures: Vec<MeasureSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultidimensionalSchema {
    pub name: String,
    pub fact: Fact,
    pub dimensions: Vec<Dimension>,
}

impl MultidimensionalSchema {
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.fact.measures.is_empty() {
            return Err(violation("the fact has no measure"));
        }
        if self.dimensions.is_empty() {
            return Err(violation("the schema has no dimension"));
        }
        let mut names = BTreeSet::new();
        for m in &self.fact.measures {
            if !names.insert(m.name.as_str()) {
                return Err(violation(format!("measure `{}` appears twice", m.name)));
            }
            if m.aggregations.is_empty() {
                return Err(violation(format!("measure `{}` has no aggregation", m.name)));
            }
        }
        let mut dim_names = BTreeSet::new();
        let mut claimed: BTreeSet<&str> = BTreeSet::new();
        for d in &self.dimensions {
            if !dim_names.insert(d.name.as_str()) {
                return Err(SchemaError::DuplicateDimensionName(d.name.clone()));
            }
            if d.hierarchies.is_empty() {
                return Err(violation(format!("dimension `{}` has no hierarchy", d.name)));
            }
            let mut covered = BTreeSet::new();
            for h in &d.hierarchies {
                if h.levels.is_empty() || h.root() != d.root {
                    return Err(violation(format!(
                        "hierarchy `{}` does not start at `{}`",
                        h.name, d.root
                    )));
                }
                let params: BTreeSet<&str> = h.parameters().collect();
                if params.len() != h.levels.len() {
                    return Err(violation(format!("hierarchy `{}` repeats a parameter", h.name)));
                }
                covered.extend(h.attributes());
            }
            let attrs: BTreeSet<&str> = d.attributes.iter().map(String::as_str).collect();
            if attrs != covered || attrs.len() != d.attributes.len() {
                return Err(violation(format!(
                    "dimension `{}` attributes differ from its hierarchies",
                    d.name
                )));
            }
            for a in attrs {
                if !claimed.insert(a) {
                    return Err(violation(format!("attribute `{a}` belongs to two dimensions")));
                }
            }
        }
        for m in &self.fact.measures {
            if let Some(src) = &m.source {
                if m.formula.is_none() && claimed.contains(src.as_str()) {
                    return Err(violation(format!("measure attribute `{src}` is in a dimension")));
                }
            }
        }
        Ok(())
    }
}

/// Links the measures to the dimensions. The fact grain is the tuple of all
/// dimension roots, so no further dependency check is made.
pub fn assemble_schema(
    fact_name: &str,
    measures: Vec<MeasureSpec>,
    dimensions: Vec<Dimension>,
    schema_name: &str,
) -> Result<MultidimensionalSchema, SchemaError> {
    let schema = MultidimensionalSchema {
        name: schema_name.to_string(),
        fact: Fact {
            name: fact_name.to_string(),
            measures,
        },
        dimensions,
    };
    schema.validate()?;
    Ok(schema)
}

/// Pretty JSON with a trailing newline. Field order is fixed by the types.
pub fn serialize_schema(schema: &MultidimensionalSchema) -> String {
    let mut out = serde_json::to_string_pretty(schema).expect("schema is plain data");
    out.push('\n');
    out
}

pub fn deserialize_schema(text: &str) -> Result<MultidimensionalSchema, SchemaError> {
    let schema: MultidimensionalSchema =
        serde_json::from_str(text).map_err(|e| SchemaError::Json(e.to_string()))?;
    schema.validate()?;
    Ok(schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Aggregation, Origin};

    fn measure(name: &str) -> MeasureSpec {
        MeasureSpec {
            name: name.into(),
            source: Some(name.into()),
            aggregations: BTreeSet::from([Aggregation::Sum]),
            formula: None,
            origin: Origin::Auto,
        }
    }

    fn dim(name: &str, attrs: &[&str]) -> Dimension {
        Dimension {
            name: name.into(),
            root: attrs[0].into(),
            attributes: attrs.iter().map(|a| a.to_string()).collect(),
            hierarchies: vec![Hierarchy {
                name: format!("H_{name}"),
                levels: attrs
                    .iter()
                    .map(|a| Level {
                        parameter: a.to_string(),
                        weak_attributes: vec![],
                    })
                    .collect(),
            }],
        }
    }

    #[test]
    fn minimal_schema_round_trips() {
        let s = assemble_schema("F1", vec![measure("qty")], vec![dim("D1", &["id"])], "schema").unwrap();
        let json = serialize_schema(&s);
        assert!(json.starts_with("{\n  \"name\": \"schema\",\n  \"fact\": {"));
        assert_eq!(deserialize_schema(&json).unwrap(), s);
    }

    #[test]
    fn missing_origin_reads_as_auto() {
        let s = assemble_schema("F1", vec![measure("qty")], vec![dim("D1", &["id"])], "schema").unwrap();
        let json = serialize_schema(&s).replace(",\n        \"origin\": \"auto\"", "");
        assert!(!json.contains("origin"));
        assert_eq!(deserialize_schema(&json).unwrap(), s);
    }

    #[test]
    fn overlap_is_rejected() {
        let r = assemble_schema(
            "F1",
            vec![measure("qty")],
            vec![dim("D1", &["a", "c"]), dim("D2", &["b", "c"])],
            "s",
        );
        assert!(matches!(r, Err(SchemaError::InvariantViolation(_))));
    }

    #[test]
    fn other_invariants() {
        assert!(assemble_schema("F1", vec![], vec![dim("D1", &["a"])], "s").is_err());
        assert!(assemble_schema("F1", vec![measure("a")], vec![], "s").is_err());
        assert!(assemble_schema("F1", vec![measure("a")], vec![dim("D1", &["a"])], "s").is_err());
        assert_eq!(
            assemble_schema("F1", vec![measure("q")], vec![dim("D", &["a"]), dim("D", &["b"])], "s"),
            Err(SchemaError::DuplicateDimensionName("D".into()))
        );
    }
}
