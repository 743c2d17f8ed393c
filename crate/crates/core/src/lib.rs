//! Turns raw tabular files into conceptual multidimensional (star) schemas.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`ingest`] reads CSV/TSV/HTML bytes into [`RawGrid`]s and splits
//!    sheets holding several tables;
//! 2. [`classify`] places each grid in the table typology (structure, cell
//!    content, header);
//! 3. [`transform`] rewrites the grid into a flat [`CanonicalTable`];
//! 4. [`profile`] types every column and proposes candidate measures;
//! 5. [`fdmine`] discovers unary functional dependencies and their minimal
//!    cover;
//! 6. [`schema`] derives hierarchies, dimensions and the fact, and can
//!    populate star tables from the canonical data.
//!
//! [`pipeline`] chains all of them.

pub mod classify;
pub mod fdmine;
#[cfg(feature = "fixtures")]
pub mod fixtures;
pub mod grid;
pub mod ingest;
pub mod profile;
pub mod schema;
pub mod table;
pub mod transform;
pub mod value;

pub use classify::{classify_table, detect_orientation, TableTypology};
pub use grid::{Cell, Dialect, RawGrid};
pub use ingest::{read_source, split_tables, FormatHint};
pub use table::CanonicalTable;
pub use transform::{normalize, HierarchyHint};
