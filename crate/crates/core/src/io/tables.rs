//! CSV tables with a published column schema.
//!
//! Numeric headers read `name[unit]`; units are `E` (energy), `len`
//! (length), `1/len`, `E*len` (current) and `1` (dimensionless). Optional
//! values are written as empty cells.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::{invariant, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Int,
    OptInt,
    Float,
    OptFloat,
    Bool,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
    pub kind: ColumnKind,
}

impl Column {
    pub fn header(&self) -> String {
        match self.kind {
            ColumnKind::Text | ColumnKind::Bool => self.name.to_string(),
            _ => format!("{}[{}]", self.name, self.unit),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableSchema {
    pub file: &'static str,
    pub columns: &'static [Column],
}

const fn col(name: &'static str, unit: &'static str, kind: ColumnKind) -> Column {
    Column { name, unit, kind }
}

use ColumnKind::*;

pub const STATES: TableSchema = TableSchema {
    file: "states.csv",
    columns: &[
        col("seed", "1", Int),
        col("energy", "E", Float),
        col("set", "", Text),
        col("reference_energy", "E", OptFloat),
        col("shift", "E", OptFloat),
        col("current", "E*len", Float),
        col("reference_current", "E*len", OptFloat),
        col("x_centroid", "len", Float),
        col("x_spread", "len", Float),
        col("min_slice", "1/len", Float),
        col("y_bar", "len", Float),
        col("dy_slice", "len", Float),
        col("baseline", "1/len", Float),
        col("slice_ratio", "1", Float),
        col("label", "", Text),
        col("residual", "E", Float),
    ],
};

pub const REALIZATIONS: TableSchema = TableSchema {
    file: "realizations.csv",
    columns: &[
        col("seed", "1", Int),
        col("window_count", "1", Int),
        col("n_left", "1", Int),
        col("n_right", "1", Int),
        col("n_bulk", "1", Int),
        col("n_reference", "1", Int),
        col("n_unmatched_reference", "1", Int),
        col("cap", "E", Float),
        col("median_shift", "E", OptFloat),
        col("max_shift", "E", OptFloat),
        col("min_edge_current", "E*len", OptFloat),
        col("max_bulk_current", "E*len", OptFloat),
        col("dist_bulk_edge", "E", OptFloat),
        col("bulk_reference_count", "1", OptInt),
        col("bulk_matched", "1", OptInt),
        col("bulk_match_max_shift", "E", OptFloat),
        col("max_current_deviation", "E*len", OptFloat),
        col("max_slice_ratio", "1", OptFloat),
        col("partition_ok", "", Bool),
        col("currents_ok", "", Bool),
        col("slice_ok", "", Bool),
        col("warnings", "1", Int),
    ],
};

pub const AGGREGATE: TableSchema = TableSchema {
    file: "aggregate.csv",
    columns: &[
        col("L", "len", Float),
        col("seeds_run", "1", Int),
        col("seeds_failed", "1", Int),
        col("pooled_median_shift", "E", OptFloat),
        col("max_shift_q10", "E", OptFloat),
        col("max_shift_q50", "E", OptFloat),
        col("max_shift_q90", "E", OptFloat),
        col("fraction_partition_ok", "1", OptFloat),
        col("fraction_currents_ok", "1", OptFloat),
        col("fraction_exhaustive", "1", OptFloat),
        col("fraction_slice_ok", "1", OptFloat),
        col("max_bulk_current", "E*len", OptFloat),
        col("min_edge_current", "E*len", OptFloat),
        col("mean_window_count", "1", OptFloat),
        col("total_bulk_states", "1", Int),
    ],
};

pub const FAILURES: TableSchema = TableSchema {
    file: "failures.csv",
    columns: &[col("seed", "1", Int), col("message", "", Text)],
};

pub const FIT_SUMMARY: TableSchema = TableSchema {
    file: "fit_summary.csv",
    columns: &[
        col("model", "", Text),
        col("status", "", Text),
        col("slope", "1", OptFloat),
        col("intercept", "1", OptFloat),
        col("residual", "1", OptFloat),
        col("n_used", "1", Int),
        col("n_censored", "1", Int),
        col("floor", "E", Float),
        col("message", "", Text),
    ],
};

pub const FIT_POINTS: TableSchema = TableSchema {
    file: "fit_points.csv",
    columns: &[
        col("L", "len", Float),
        col("abscissa", "1", Float),
        col("median_shift", "E", OptFloat),
        col("censored", "", Bool),
    ],
};

pub const FLUX_SCAN: TableSchema = TableSchema {
    file: "flux_scan.csv",
    columns: &[
        col("L", "len", Float),
        col("flux", "1", Float),
        col("n_left", "1", Int),
        col("n_right", "1", Int),
        col("min_spacing", "E", OptFloat),
        col("scaled", "E*len", OptFloat),
        col("best", "", Bool),
    ],
};

const BRANCH_COLUMNS: &[Column] = &[
    col("band", "1", Int),
    col("k", "1/len", Float),
    col("energy", "E", Float),
    col("current", "E*len", Float),
    col("slope", "E*len", Float),
    col("monotone_violation", "", Bool),
];

pub const BRANCHES_LEFT: TableSchema = TableSchema {
    file: "branches_left.csv",
    columns: BRANCH_COLUMNS,
};

pub const BRANCHES_RIGHT: TableSchema = TableSchema {
    file: "branches_right.csv",
    columns: BRANCH_COLUMNS,
};

pub const SPECTRUM: TableSchema = TableSchema {
    file: "spectrum.csv",
    columns: &[
        col("seed", "1", Int),
        col("index", "1", Int),
        col("energy", "E", Float),
        col("residual", "E", Float),
        col("current", "E*len", Float),
        col("x_centroid", "len", Float),
    ],
};

pub const FIBERS: TableSchema = TableSchema {
    file: "fibers.csv",
    columns: &[
        col("mode", "1", Int),
        col("k", "1/len", Float),
        col("band", "1", Int),
        col("energy", "E", Float),
        col("current", "E*len", Float),
        col("x_centroid", "len", Float),
    ],
};

pub const DIAGNOSTICS: TableSchema = TableSchema {
    file: "diagnostics.csv",
    columns: &[
        col("seed", "1", Int),
        col("energy", "E", Float),
        col("current", "E*len", Float),
        col("x_centroid", "len", Float),
        col("x_spread", "len", Float),
        col("min_slice", "1/len", Float),
        col("y_bar", "len", Float),
        col("dy_slice", "len", Float),
        col("baseline", "1/len", Float),
        col("slice_ratio", "1", Float),
        col("label", "", Text),
        col("residual", "E", Float),
    ],
};

pub const OPERATOR_COO: TableSchema = TableSchema {
    file: "operator_coo.csv",
    columns: &[
        col("row", "1", Int),
        col("col", "1", Int),
        col("re", "E", Float),
        col("im", "E", Float),
    ],
};

/// Every table a run can emit.
pub const SCHEMAS: &[TableSchema] = &[
    STATES,
    REALIZATIONS,
    AGGREGATE,
    FAILURES,
    FIT_SUMMARY,
    FIT_POINTS,
    FLUX_SCAN,
    BRANCHES_LEFT,
    BRANCHES_RIGHT,
    SPECTRUM,
    FIBERS,
    DIAGNOSTICS,
    OPERATOR_COO,
];

pub fn schema_for(file: &str) -> Option<&'static TableSchema> {
    SCHEMAS.iter().find(|s| s.file == file)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    OptInt(Option<i64>),
    Float(f64),
    OptFloat(Option<f64>),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn kind(&self) -> ColumnKind {
        match self {
            Cell::Int(_) => Int,
            Cell::OptInt(_) => OptInt,
            Cell::Float(_) => Float,
            Cell::OptFloat(_) => OptFloat,
            Cell::Bool(_) => Bool,
            Cell::Text(_) => Text,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::OptInt(v) => v.map_or(String::new(), |v| v.to_string()),
            Cell::Float(v) => render_float(*v),
            Cell::OptFloat(v) => v.map_or(String::new(), render_float),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e15)`.
fn render_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<Option<usize>> for Cell {
    fn from(v: Option<usize>) -> Self {
        Cell::OptInt(v.map(|v| v as i64))
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::OptFloat(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Single writer for one table file.
pub struct TableWriter {
    schema: &'static TableSchema,
    inner: csv::Writer<BufWriter<File>>,
}

impl TableWriter {
    pub fn create(dir: &Path, schema: &'static TableSchema) -> Result<Self> {
        let file = File::create(dir.join(schema.file))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(schema.columns.iter().map(Column::header))?;
        Ok(Self { schema, inner })
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> Result<()> {
        if cells.len() != self.schema.columns.len() {
            return invariant(format!(
                "{}: row has {} cells, schema has {}",
                self.schema.file,
                cells.len(),
                self.schema.columns.len()
            ));
        }
        for (c, column) in cells.iter().zip(self.schema.columns) {
            let ok = c.kind() == column.kind
                || matches!((c.kind(), column.kind), (Int, OptInt) | (Float, OptFloat));
            if !ok {
                return invariant(format!("{}: column {} expects {:?}", self.schema.file, column.name, column.kind));
            }
        }
        self.inner.write_record(cells.iter().map(Cell::render))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Writes a whole table at once.
pub fn write_table(dir: &Path, schema: &'static TableSchema, rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<()> {
    let mut w = TableWriter::create(dir, schema)?;
    for r in rows {
        w.row(r)?;
    }
    w.finish()
}

/// Rows of a table file as raw strings, header dropped after checking it.
pub fn read_table(path: &Path, schema: &TableSchema) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<String> = schema.columns.iter().map(Column::header).collect();
    if header != expected {
        return invariant(format!("{}: header {:?} does not match schema {:?}", path.display(), header, expected));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn cell_valid(kind: ColumnKind, s: &str) -> bool {
    match kind {
        Int => s.parse::<i64>().is_ok(),
        OptInt => s.is_empty() || s.parse::<i64>().is_ok(),
        Float => s.parse::<f64>().is_ok(),
        OptFloat => s.is_empty() || s.parse::<f64>().is_ok(),
        Bool => s == "true" || s == "false",
        Text => true,
    }
}

/// Checks one file against its schema; returns the number of data rows.
pub fn validate_file(path: &Path) -> Result<usize> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    let Some(schema) = schema_for(name) else {
        return invariant(format!("{}: no published schema for this file", path.display()));
    };
    let rows = read_table(path, schema)?;
    for (i, row) in rows.iter().enumerate() {
        for (cell, column) in row.iter().zip(schema.columns) {
            if !cell_valid(column.kind, cell) {
                return invariant(format!(
                    "{}: row {} column {} has invalid value {:?}",
                    path.display(),
                    i + 1,
                    column.name,
                    cell
                ));
            }
        }
    }
    Ok(rows.len())
}

/// Every CSV file under `dir`, sorted.
pub fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Validates every CSV under `dir`; fails on the first invalid file.
pub fn validate_dir(dir: &Path) -> Result<Vec<(PathBuf, usize)>> {
    let files = csv_files(dir)?;
    if files.is_empty() {
        return Err(Error::Config {
            path: dir.display().to_string(),
            message: "no CSV files to check".to_string(),
        });
    }
    files
        .into_iter()
        .map(|p| validate_file(&p).map(|n| (p, n)))
        .collect()
}
