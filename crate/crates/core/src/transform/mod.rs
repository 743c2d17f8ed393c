//! Normalization of classified grids into canonical one-dimensional tables.
//!
//! [`normalize`] plans a list of [`TransformStep`]s from the typology and then
//! replays them; the same list is recorded in the table's provenance, so
//! [`replay`] on the source grid reproduces the table exactly.

mod steps;

use serde::{Deserialize, Serialize};

use crate::classify::{
    self, CellContent, ClassifyOptions, HeaderArrangement, HeaderKind, Structure, TableTypology,
};
use crate::grid::RawGrid;
use crate::table::{CanonicalTable, Provenance, TableError};

pub use steps::{expand_merged, explode_multivalued, synthesize_header};

/// Ordered attribute names from coarse to fine, recovered from stacked
/// headers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyHint {
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum TransformStep {
    Transpose,
    RemoveRepeatedHeaders { header_rows: usize },
    StackDistributedBlocks { width: usize },
    FlattenHeader { levels: usize },
    ExpandMerged { header_rows: usize },
    SuperRowsToColumn { header_rows: usize },
    UnpivotCross { header_rows: usize },
    ExplodeMultivalued { header_rows: usize, delimiters: String },
    SynthesizeHeader,
}

impl TransformStep {
    pub fn name(&self) -> &'static str {
        match self {
            TransformStep::Transpose => "transpose",
            TransformStep::RemoveRepeatedHeaders { .. } => "remove_repeated_headers",
            TransformStep::StackDistributedBlocks { .. } => "stack_distributed_blocks",
            TransformStep::FlattenHeader { .. } => "flatten_header",
            TransformStep::ExpandMerged { .. } => "expand_merged",
            TransformStep::SuperRowsToColumn { .. } => "super_rows_to_column",
            TransformStep::UnpivotCross { .. } => "unpivot_cross",
            TransformStep::ExplodeMultivalued { .. } => "explode_multivalued",
            TransformStep::SynthesizeHeader => "synthesize_header",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("nested tables cannot be normalized")]
    NestedTableUnsupported,
    #[error("normalization failed at step `{step}`: {reason}")]
    NormalizationFailed { step: String, reason: String },
    #[error("grid is not a cross table")]
    NotACrossTable,
    #[error("composite column `{column}` splits into {found} parts where {expected} were expected")]
    InconsistentCompositeArity {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("header repair failed: {0}")]
    HeaderRepairFailed(String),
}

fn failed(step: &str, reason: impl Into<String>) -> TransformError {
    TransformError::NormalizationFailed {
        step: step.to_string(),
        reason: reason.into(),
    }
}

impl From<TableError> for TransformError {
    fn from(e: TableError) -> Self {
        failed("build", e.to_string())
    }
}

/// Optional names for the three columns an unpivot produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossNames {
    pub row_dim: String,
    pub col_dim: String,
    pub value: String,
}

/// Works out the steps that turn `grid` into a canonical table.
pub fn plan(
    grid: &RawGrid,
    typology: &TableTypology,
    opts: &ClassifyOptions,
) -> Result<Vec<TransformStep>, TransformError> {
    if typology.has_cell(CellContent::Nested) {
        return Err(TransformError::NestedTableUnsupported);
    }
    let mut plan = Vec::new();
    let transpose = typology.structure == Structure::Vertical
        || (typology.structure == Structure::Listing && grid.n_rows() == 1 && grid.n_cols() > 1);
    let view = if transpose {
        plan.push(TransformStep::Transpose);
        grid.transpose()
    } else {
        grid.clone()
    };

    let top = classify::top_header(&view);
    let mut header_rows = if typology.structure == Structure::Cross {
        classify::cross_rails(&view)
            .ok_or_else(|| failed("unpivot_cross", "no cross-table rails found"))?
            .header_rows
    } else if typology.header == HeaderKind::None {
        0
    } else {
        top.ok_or_else(|| failed("normalize_headers", "typology reports a header but none was found"))?
            .rows
    };

    match typology.header_arrangement {
        Some(HeaderArrangement::Duplicated) => {
            plan.push(TransformStep::RemoveRepeatedHeaders { header_rows });
        }
        Some(HeaderArrangement::Distributed) => {
            let width = top.and_then(|h| h.distributed_width).ok_or_else(|| {
                TransformError::HeaderRepairFailed("no repeating header block found".into())
            })?;
            plan.push(TransformStep::StackDistributedBlocks { width });
        }
        _ => {}
    }
    if typology.header == HeaderKind::Hierarchical && typology.structure != Structure::Cross {
        plan.push(TransformStep::FlattenHeader {
            levels: header_rows,
        });
        header_rows = 1;
    }
    if typology.is_merged() {
        plan.push(TransformStep::ExpandMerged { header_rows });
    }
    if typology.structure == Structure::SuperRow {
        plan.push(TransformStep::SuperRowsToColumn { header_rows });
    }
    if typology.structure == Structure::Cross {
        plan.push(TransformStep::UnpivotCross { header_rows });
        header_rows = 1;
    }
    if typology.is_multivalued() {
        plan.push(TransformStep::ExplodeMultivalued {
            header_rows,
            delimiters: opts.multivalue_delimiters.iter().collect(),
        });
    }
    if typology.header == HeaderKind::None {
        plan.push(TransformStep::SynthesizeHeader);
    }
    Ok(plan)
}

/// Rewrites a classified grid into a canonical table plus the hierarchy
/// hints found while flattening headers.
pub fn normalize(
    grid: &RawGrid,
    typology: &TableTypology,
) -> Result<(CanonicalTable, Vec<HierarchyHint>), TransformError> {
    normalize_with(grid, typology, &ClassifyOptions::default())
}

pub fn normalize_with(
    grid: &RawGrid,
    typology: &TableTypology,
    opts: &ClassifyOptions,
) -> Result<(CanonicalTable, Vec<HierarchyHint>), TransformError> {
    let steps = plan(grid, typology, opts)?;
    replay(grid, &steps)
}

/// Applies a recorded step list to a source grid.
pub fn replay(
    grid: &RawGrid,
    steps: &[TransformStep],
) -> Result<(CanonicalTable, Vec<HierarchyHint>), TransformError> {
    // a source grid has one header row unless a step says otherwise
    let mut state = steps::Working {
        grid: grid.clone(),
        header_rows: 1,
        hints: Vec::new(),
    };
    for step in steps {
        state = steps::apply(step, state)?;
    }
    if state.header_rows == 0 {
        return Err(failed("build", "table has no header row"));
    }
    steps::build(state, &grid.source_name, steps.to_vec())
}

/// Runs the header repairs: repeated-header removal, distributed-block
/// stacking and hierarchical flattening.
pub fn normalize_headers(
    grid: &RawGrid,
    typology: &TableTypology,
) -> Result<(RawGrid, Vec<HierarchyHint>), TransformError> {
    let steps: Vec<TransformStep> = plan(grid, typology, &ClassifyOptions::default())?
        .into_iter()
        .filter(|s| {
            matches!(
                s,
                TransformStep::RemoveRepeatedHeaders { .. }
                    | TransformStep::StackDistributedBlocks { .. }
                    | TransformStep::FlattenHeader { .. }
            )
        })
        .collect();
    let mut state = steps::Working {
        grid: grid.clone(),
        header_rows: 0,
        hints: Vec::new(),
    };
    for step in &steps {
        state = steps::apply(step, state)?;
    }
    Ok((state.grid, state.hints))
}

/// Turns a cross table into (row label, column label, value) tuples, one per
/// non-empty interior cell.
pub fn unpivot_cross(
    grid: &RawGrid,
    names: Option<CrossNames>,
) -> Result<CanonicalTable, TransformError> {
    let rails = classify::cross_rails(grid).ok_or(TransformError::NotACrossTable)?;
    let (header, rows, _) = steps::unpivot(grid, rails.header_rows, names.as_ref());
    let step = TransformStep::UnpivotCross {
        header_rows: rails.header_rows,
    };
    Ok(CanonicalTable::new(
        crate::table::repair_names(&header),
        rows,
        Provenance {
            source_name: grid.source_name.clone(),
            steps: vec![step],
        },
    )?)
}
