//! End-to-end pipeline behind the `tabstar` command.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use tabstar::classify::{classify_table_with, ClassifyOptions, TableTypology};
use tabstar::fdmine::{minimal_cover, mine_unary_fds, FdError, FunctionalDependency};
use tabstar::ingest::{read_source, split_tables, FormatHint};
use tabstar::profile::{
    apply_overrides, measure_attributes, profile_table, select_measures, ColumnProfile, MeasureSpec,
    Origin, OverrideDocument, ProfileError,
};
use tabstar::schema::{
    assemble_schema, build_dependency_graph, extract_hierarchies, group_dimensions, populate_star,
    serialize_schema, MultidimensionalSchema, SchemaError, DEFAULT_FACT_NAME, DEFAULT_SCHEMA_NAME,
};
use tabstar::transform::{normalize_with, HierarchyHint, TransformStep};
use tabstar::{CanonicalTable, RawGrid};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub format: Option<FormatHint>,
    pub fd_threshold: f64,
    pub delimiters: Vec<char>,
    pub overrides: Option<PathBuf>,
    pub table_index: usize,
    pub schema_out: Option<PathBuf>,
    pub normalized_out: Option<PathBuf>,
    pub ddl_out: Option<PathBuf>,
    pub populate_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input: input.into(),
            format: None,
            fd_threshold: 0.0,
            delimiters: ClassifyOptions::default().multivalue_delimiters,
            overrides: None,
            table_index: 0,
            schema_out: None,
            normalized_out: None,
            ddl_out: None,
            populate_dir: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Input(String),
    #[error("no measures left after overrides")]
    NoMeasures,
    #[error("{0}")]
    Normalization(String),
    #[error("invalid override document: {0}")]
    Override(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) => 1,
            PipelineError::NoMeasures => 2,
            PipelineError::Normalization(_) => 3,
            PipelineError::Override(_) => 4,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Input(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    std::fs::write(path, contents).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

/// Reads a source and splits it into tables, in reading order.
pub fn load_tables(input: &Path, format: Option<FormatHint>) -> Result<Vec<RawGrid>, PipelineError> {
    let bytes = std::fs::read(input).map_err(|e| input_err(format!("{}: {e}", input.display())))?;
    let name = input.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let grids = read_source(&bytes, format, &name).map_err(input_err)?;
    Ok(grids.iter().flat_map(split_tables).collect())
}

pub fn select_table(tables: Vec<RawGrid>, index: usize) -> Result<RawGrid, PipelineError> {
    let n = tables.len();
    tables
        .into_iter()
        .nth(index)
        .ok_or_else(|| input_err(format!("table index {index} out of range ({n} tables found)")))
}

pub struct Normalized {
    pub typology: TableTypology,
    pub table: CanonicalTable,
    pub hints: Vec<HierarchyHint>,
}

pub fn classify_and_normalize(grid: &RawGrid, delimiters: &[char]) -> Result<Normalized, PipelineError> {
    let opts = ClassifyOptions {
        multivalue_delimiters: delimiters.to_vec(),
    };
    let typology =
        classify_table_with(grid, &opts).map_err(|e| PipelineError::Normalization(e.to_string()))?;
    let (table, hints) =
        normalize_with(grid, &typology, &opts).map_err(|e| PipelineError::Normalization(e.to_string()))?;
    Ok(Normalized { typology, table, hints })
}

/// Sidecar written next to a normalized CSV.
pub fn sidecar_json(n: &Normalized) -> String {
    let doc = json!({
        "source": n.table.provenance.source_name,
        "typology": n.typology,
        "steps": n.table.provenance.steps,
        "hints": n.hints,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data");
    s.push('\n');
    s
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn read_overrides(path: Option<&Path>) -> Result<OverrideDocument, PipelineError> {
    match path {
        None => Ok(OverrideDocument::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| PipelineError::Override(format!("{}: {e}", p.display())))?;
            OverrideDocument::from_json(&text).map_err(|e| PipelineError::Override(e.to_string()))
        }
    }
}

fn override_err(e: ProfileError) -> PipelineError {
    match e {
        ProfileError::NoCandidateMeasures => PipelineError::NoMeasures,
        other => PipelineError::Override(other.to_string()),
    }
}

pub struct MeasureSelection {
    pub profiles: Vec<ColumnProfile>,
    pub candidates: Vec<MeasureSpec>,
    pub measures: Vec<MeasureSpec>,
}

pub fn choose_measures(table: &CanonicalTable, overrides: &OverrideDocument) -> Result<MeasureSelection, PipelineError> {
    let profiles = profile_table(table);
    let candidates = select_measures(&profiles);
    let measures = apply_overrides(&candidates, overrides, &profiles).map_err(override_err)?;
    Ok(MeasureSelection {
        profiles,
        candidates,
        measures,
    })
}

/// Minimal cover of the dependencies among non-measure attributes. Tables
/// with fewer than two rows yield no dependency.
pub fn mine_cover(
    table: &CanonicalTable,
    measures: &[MeasureSpec],
    threshold: f64,
) -> Result<(Vec<FunctionalDependency>, Option<FdError>), PipelineError> {
    match mine_unary_fds(table, &measure_attributes(measures), threshold) {
        Ok(fds) => Ok((minimal_cover(&fds), None)),
        Err(e @ FdError::TooFewRows(_)) => Ok((Vec::new(), Some(e))),
        Err(e) => Err(input_err(e)),
    }
}

pub fn derive_schema(
    selection: &MeasureSelection,
    cover: &[FunctionalDependency],
    overrides: &OverrideDocument,
) -> Result<MultidimensionalSchema, PipelineError> {
    let excluded = measure_attributes(&selection.measures);
    let graph = build_dependency_graph(cover, &excluded, &selection.profiles).map_err(input_err)?;
    let hierarchies = extract_hierarchies(&graph);
    let dimensions = group_dimensions(&hierarchies, &overrides.dimension_names).map_err(|e| match e {
        SchemaError::DuplicateDimensionName(_) | SchemaError::UnknownDimension(_) => {
            PipelineError::Override(e.to_string())
        }
        other => input_err(other),
    })?;
    let placed: BTreeSet<&str> = dimensions
        .iter()
        .flat_map(|d| d.attributes.iter().map(String::as_str))
        .collect();
    if let Some(p) = selection
        .profiles
        .iter()
        .find(|p| !excluded.contains(&p.attribute) && !placed.contains(p.attribute.as_str()))
    {
        return Err(input_err(format!("attribute `{}` is in no dimension", p.attribute)));
    }
    let name = overrides.schema_name.as_deref().unwrap_or(DEFAULT_SCHEMA_NAME);
    assemble_schema(DEFAULT_FACT_NAME, selection.measures.clone(), dimensions, name).map_err(input_err)
}

pub struct PipelineOutcome {
    pub normalized: Normalized,
    pub selection: MeasureSelection,
    pub cover: Vec<FunctionalDependency>,
    pub schema: MultidimensionalSchema,
    pub artifacts: Vec<PathBuf>,
}

fn count(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

fn label<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn list(items: impl IntoIterator<Item = impl AsRef<str>>) -> String {
    items.into_iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>().join(", ")
}

fn step_names(steps: &[TransformStep]) -> String {
    if steps.is_empty() {
        "none".into()
    } else {
        list(steps.iter().map(TransformStep::name))
    }
}

/// Runs every stage on one table of the input, writing a readable account
/// of each stage to `report` and the requested artifacts to disk.
pub fn run_pipeline(config: &PipelineConfig, report: &mut dyn Write) -> Result<PipelineOutcome, PipelineError> {
    if !(0.0..1.0).contains(&config.fd_threshold) {
        return Err(input_err(format!("fd threshold {} outside [0, 1)", config.fd_threshold)));
    }
    let overrides = read_overrides(config.overrides.as_deref())?;
    let mut say = |line: String| {
        let _ = writeln!(report, "{line}");
    };

    let tables = load_tables(&config.input, config.format)?;
    say(format!(
        "[ingest] {}: {} found, using table {}",
        config.input.display(),
        count(tables.len(), "table", "tables"),
        config.table_index
    ));
    let grid = select_table(tables, config.table_index)?;

    let normalized = classify_and_normalize(&grid, &config.delimiters)?;
    let t = &normalized.typology;
    say(format!(
        "[classify] structure={} header={} cells={}",
        label(&t.structure),
        label(&t.header),
        list(t.cell_content.iter().map(label))
    ));
    let table = &normalized.table;
    say(format!(
        "[normalize] {} x {}; steps: {}",
        count(table.n_rows(), "row", "rows"),
        count(table.attributes().len(), "attribute", "attributes"),
        step_names(&table.provenance.steps)
    ));
    for h in &normalized.hints {
        say(format!("[normalize] hierarchy hint <{}>", list(&h.levels)));
    }
    if let Some(path) = &config.normalized_out {
        write_file(path, &table.to_csv())?;
        write_file(&sidecar_path(path), &sidecar_json(&normalized))?;
    }

    let selection = choose_measures(table, &overrides)?;
    for p in &selection.profiles {
        say(format!(
            "[profile] {}: {} ({} distinct, {} missing)",
            p.attribute,
            label(&p.kind),
            p.distinct_count,
            p.null_count
        ));
    }
    let detected: Vec<&str> = selection
        .candidates
        .iter()
        .filter(|m| m.source.is_some())
        .map(|m| m.name.as_str())
        .collect();
    if detected.is_empty() {
        say("[measures] warning: no candidate measures, only row_count is offered".into());
    }
    say(format!("[measures] {} detected: {}", count(detected.len(), "measure", "measures"), list(&detected)));
    let user = selection.measures.iter().filter(|m| m.origin == Origin::User).count();
    say(format!(
        "[measures] fact {}: {} ({} from overrides): {}",
        DEFAULT_FACT_NAME,
        count(selection.measures.len(), "measure", "measures"),
        user,
        list(selection.measures.iter().map(|m| m.name.as_str()))
    ));

    let (cover, warning) = mine_cover(table, &selection.measures, config.fd_threshold)?;
    if let Some(w) = warning {
        say(format!("[fds] warning: {w}; no dependency used"));
    }
    say(format!(
        "[fds] {} in the minimal cover (threshold {})",
        count(cover.len(), "dependency", "dependencies"),
        config.fd_threshold
    ));
    for f in &cover {
        say(format!("[fds]   {} -> {} (error={:.4})", f.lhs, f.rhs, f.error));
    }

    let schema = derive_schema(&selection, &cover, &overrides)?;
    let hierarchies: Vec<_> = schema.dimensions.iter().flat_map(|d| &d.hierarchies).collect();
    say(format!("[schema] {}", count(hierarchies.len(), "hierarchy", "hierarchies")));
    for h in &hierarchies {
        say(format!("[schema]   {} <{}>", h.name, list(h.parameters())));
    }
    say(format!("[schema] {}", count(schema.dimensions.len(), "dimension", "dimensions")));
    for d in &schema.dimensions {
        say(format!(
            "[schema]   {} root={} {{{}}} {{{}}}",
            d.name,
            d.root,
            list(&d.attributes),
            list(d.hierarchies.iter().map(|h| h.name.as_str()))
        ));
    }

    let mut artifacts = Vec::new();
    if let Some(path) = &config.normalized_out {
        artifacts.push(path.clone());
        artifacts.push(sidecar_path(path));
    }
    if let Some(path) = &config.schema_out {
        write_file(path, &serialize_schema(&schema))?;
        artifacts.push(path.clone());
    }
    if config.ddl_out.is_some() || config.populate_dir.is_some() {
        let star = populate_star(&schema, table).map_err(input_err)?;
        if let Some(path) = &config.ddl_out {
            write_file(path, &star.ddl)?;
            artifacts.push(path.clone());
        }
        if let Some(dir) = &config.populate_dir {
            let written = star
                .write_dir(dir)
                .map_err(|e| input_err(format!("{}: {e}", dir.display())))?;
            say(format!(
                "[populate] {} written to {} ({} fact rows)",
                count(written.len(), "file", "files"),
                dir.display(),
                star.fact.rows.len()
            ));
            artifacts.extend(written);
        }
    }

    Ok(PipelineOutcome {
        normalized,
        selection,
        cover,
        schema,
        artifacts,
    })
}

/// `lhs -> rhs (error=…)` lines for the `fds` subcommand.
pub fn format_fds(fds: &[FunctionalDependency]) -> String {
    fds.iter()
        .map(|f| format!("{} -> {} (error={:.4})\n", f.lhs, f.rhs, f.error))
        .collect()
}
