use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tabstar::classify::{classify_table_with, ClassifyOptions};
use tabstar::ingest::FormatHint;
use tabstar::schema::{deserialize_schema, populate_star};
use tabstar::CanonicalTable;
use tabstar_cli::{
    choose_measures, classify_and_normalize, format_fds, load_tables, mine_cover, read_overrides, run_pipeline,
    select_table, sidecar_json, sidecar_path, PipelineConfig, PipelineError,
};

#[derive(Parser)]
#[command(name = "tabstar", version, about = "Infer star schemas from raw tabular files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Source {
    /// CSV, TSV or HTML file
    input: PathBuf,
    /// Input format; guessed from the content when absent
    #[arg(long)]
    format: Option<FormatHint>,
    /// Which table to use when the source holds several (0-based)
    #[arg(long, default_value_t = 0)]
    table: usize,
    /// Characters separating values inside multivalued cells
    #[arg(long, default_value = ",;/|")]
    delimiters: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write the schema
    Infer {
        #[command(flatten)]
        source: Source,
        /// Approximate dependency threshold (g3 error), in [0, 1)
        #[arg(long, default_value_t = 0.0)]
        fd_threshold: f64,
        /// JSON document correcting measures and naming dimensions
        #[arg(long = "override")]
        overrides: Option<PathBuf>,
        /// Schema JSON output
        #[arg(long)]
        out: Option<PathBuf>,
        /// Normalized CSV output (a sidecar .json is written next to it)
        #[arg(long)]
        normalized: Option<PathBuf>,
        /// DDL script output
        #[arg(long)]
        ddl: Option<PathBuf>,
        /// Directory receiving the populated star tables
        #[arg(long)]
        populate: Option<PathBuf>,
    },
    /// Print the typology of every table found in the source, one JSON line each
    Classify {
        #[command(flatten)]
        source: Source,
    },
    /// Write the canonical table as CSV plus a sidecar with hints and steps
    Normalize {
        #[command(flatten)]
        source: Source,
        /// Output CSV; standard output when absent (no sidecar then)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the minimal cover of the dependencies among non-measure attributes
    Fds {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0.0)]
        fd_threshold: f64,
        #[arg(long = "override")]
        overrides: Option<PathBuf>,
    },
    /// Fill star tables from a schema JSON and a normalized CSV
    Populate {
        /// Normalized CSV
        input: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        dir: PathBuf,
    },
}

fn io_err(path: &std::path::Path, e: io::Error) -> PipelineError {
    PipelineError::Input(format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Infer {
            source,
            fd_threshold,
            overrides,
            out,
            normalized,
            ddl,
            populate,
        } => {
            let config = PipelineConfig {
                input: source.input,
                format: source.format,
                fd_threshold,
                delimiters: source.delimiters.chars().collect(),
                overrides,
                table_index: source.table,
                schema_out: out,
                normalized_out: normalized,
                ddl_out: ddl,
                populate_dir: populate,
            };
            run_pipeline(&config, &mut io::stderr().lock()).map(|_| ())
        }
        Command::Classify { source } => {
            let opts = ClassifyOptions {
                multivalue_delimiters: source.delimiters.chars().collect(),
            };
            let mut stdout = io::stdout().lock();
            for grid in &load_tables(&source.input, source.format)? {
                let typology =
                    classify_table_with(grid, &opts).map_err(|e| PipelineError::Normalization(e.to_string()))?;
                let _ = writeln!(stdout, "{}", typology.to_json_line());
            }
            Ok(())
        }
        Command::Normalize { source, out } => {
            let grid = select_table(load_tables(&source.input, source.format)?, source.table)?;
            let delimiters: Vec<char> = source.delimiters.chars().collect();
            let n = classify_and_normalize(&grid, &delimiters)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, n.table.to_csv()).map_err(|e| io_err(&path, e))?;
                    let side = sidecar_path(&path);
                    std::fs::write(&side, sidecar_json(&n)).map_err(|e| io_err(&side, e))?;
                }
                None => {
                    let _ = io::stdout().lock().write_all(n.table.to_csv().as_bytes());
                }
            }
            Ok(())
        }
        Command::Fds {
            source,
            fd_threshold,
            overrides,
        } => {
            if !(0.0..1.0).contains(&fd_threshold) {
                return Err(PipelineError::Input(format!("fd threshold {fd_threshold} outside [0, 1)")));
            }
            let overrides = read_overrides(overrides.as_deref())?;
            let grid = select_table(load_tables(&source.input, source.format)?, source.table)?;
            let n = classify_and_normalize(&grid, &source.delimiters.chars().collect::<Vec<_>>())?;
            let selection = choose_measures(&n.table, &overrides)?;
            let (cover, warning) = mine_cover(&n.table, &selection.measures, fd_threshold)?;
            if let Some(w) = warning {
                eprintln!("warning: {w}");
            }
            let _ = io::stdout().lock().write_all(format_fds(&cover).as_bytes());
            Ok(())
        }
        Command::Populate { input, schema, dir } => {
            let text = std::fs::read_to_string(&schema).map_err(|e| io_err(&schema, e))?;
            let schema = deserialize_schema(&text).map_err(|e| PipelineError::Input(e.to_string()))?;
            let csv = std::fs::read_to_string(&input).map_err(|e| io_err(&input, e))?;
            let name = input.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            let table = CanonicalTable::from_csv(&csv, &name).map_err(|e| PipelineError::Input(e.to_string()))?;
            let star = populate_star(&schema, &table).map_err(|e| PipelineError::Input(e.to_string()))?;
            let written = star.write_dir(&dir).map_err(|e| io_err(&dir, e))?;
            eprintln!("{} files written to {}", written.len(), dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
