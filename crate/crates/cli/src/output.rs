//! Result files: JSON reports and CSV tables, with readers for both.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use hps_core::PhaseTimes;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub name: String,
    pub kappa: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub dim: usize,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshInfo {
    pub boxes_per_dim: Vec<usize>,
    pub p: usize,
    pub corner_mode: String,
    pub leaves: usize,
    pub n_interior: usize,
    pub n_interface: usize,
    pub n_dirichlet: usize,
    pub n_total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleInfo {
    pub workers: usize,
    pub batch_size: usize,
    pub resident_limit: usize,
    pub memory_budget: usize,
    pub cache: String,
    pub peak_bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorInfo {
    pub ordering: String,
    pub nnz_factors: usize,
    pub fronts: usize,
    pub max_front: usize,
    pub delayed_pivots: usize,
    pub min_pivot: f64,
    pub growth: f64,
}

/// Report of one solve (also used by oracle checks).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveJson {
    pub schema_version: u32,
    pub mode: String,
    pub problem: ProblemInfo,
    pub mesh: MeshInfo,
    pub schedule: ScheduleInfo,
    pub wall_times: PhaseTimes,
    pub residual: f64,
    pub rel_error: Option<f64>,
    pub oracle_rel_diff: Option<f64>,
    pub factor: FactorInfo,
    pub nodes_file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotInfo {
    pub step: usize,
    pub time: f64,
    pub file: String,
    /// Weighted `(x₁, x₂)` centre of the solution.
    pub mass_center: Option<[f64; 2]>,
    /// Same over the half `x_d` above the domain midplane (3D only).
    pub mass_center_upper: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalvingRow {
    pub dt: f64,
    pub steps: usize,
    pub rel_error: f64,
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimestepJson {
    pub schema_version: u32,
    pub mode: String,
    pub problem: ProblemInfo,
    pub mesh: MeshInfo,
    pub dt: f64,
    pub steps: usize,
    pub final_time: f64,
    /// Factorizations of the interface matrix over the whole run.
    pub factorizations: usize,
    pub step_times: Vec<PhaseTimes>,
    pub snapshots: Vec<SnapshotInfo>,
    pub final_rel_error: Option<f64>,
    pub halvings: Vec<HalvingRow>,
    pub temporal_order: Option<f64>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// A CSV table held as text cells.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.header.len(), "row width must match the header");
        self.rows.push(cells.iter().map(Cell::render).collect());
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric cell; `None` for an empty cell or unknown column.
    pub fn f64_at(&self, row: usize, name: &str) -> Option<f64> {
        let c = self.column(name)?;
        let s = self.rows.get(row)?.get(c)?;
        if s.is_empty() {
            None
        } else {
            s.parse().ok()
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let to_io = |e: csv::Error| CliError::io(path, e.into());
        let mut w = csv::Writer::from_path(path).map_err(to_io)?;
        w.write_record(&self.header).map_err(to_io)?;
        for r in &self.rows {
            w.write_record(r).map_err(to_io)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let fmt = |e: csv::Error| CliError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut r = csv::Reader::from_path(path).map_err(fmt)?;
        let header = r.headers().map_err(fmt)?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()
            .map_err(fmt)?;
        Ok(Self { header, rows })
    }
}
