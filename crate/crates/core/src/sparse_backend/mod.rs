//! Sparse matrices and the direct-solver seam used for the interface system.

mod multifrontal;
pub mod oracle;
mod ordering;

use std::fmt::Debug;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dense::{DenseLu, Mat};
use crate::error::{HpsError, Result};

pub use multifrontal::{MultifrontalBackend, MultifrontalLu};
pub use oracle::{dense_full_system_oracle, dense_full_system_oracle_values, DEFAULT_ORACLE_CAP};

/// Compressed-row matrix; duplicates are summed on construction and column
/// indices are sorted within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(HpsError::DimensionMismatch {
                    expected: if i >= nrows { nrows } else { ncols },
                    got: if i >= nrows { i } else { j },
                    context: "triplet index out of range",
                });
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[fill[i]] = j;
            vals[fill[i]] = v;
            fill[i] += 1;
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut order: Vec<usize> = Vec::new();
        for i in 0..nrows {
            order.clear();
            order.extend(counts[i]..counts[i + 1]);
            order.sort_by_key(|&k| cols[k]);
            for &k in &order {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == cols[k] {
                    *values.last_mut().unwrap() += vals[k];
                } else {
                    col_idx.push(cols[k]);
                    values.push(vals[k]);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// A matrix with the given sorted, duplicate-free pattern and zero values.
    pub fn from_pattern(nrows: usize, ncols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[nrows] != col_idx.len() {
            return Err(HpsError::DimensionMismatch {
                expected: nrows + 1,
                got: row_ptr.len(),
                context: "row pointer length",
            });
        }
        for i in 0..nrows {
            let r = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if r.windows(2).any(|w| w[0] >= w[1]) || r.last().is_some_and(|&j| j >= ncols) {
                return Err(HpsError::InvalidProblem(format!("row {i} pattern is not sorted and in range")));
            }
        }
        let nnz = col_idx.len();
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &Mat) -> Self {
        let mut t = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), &t).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Dimension of a square matrix.
    pub fn n(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row_indices(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Storage slot of entry `(i, j)`, if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let s = self.row_ptr[i];
        self.row_indices(i).binary_search(&j).ok().map(|k| s + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (idx, val) = self.row(i);
                idx.iter().zip(val).map(|(&j, v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut fill = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                col_idx[fill[j]] = i;
                values[fill[j]] = v;
                fill[j] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Fails on rows or columns without a nonzero value.
    pub fn check_structure(&self) -> Result<()> {
        let mut col_seen = vec![false; self.ncols];
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            let mut any = false;
            for (&j, &v) in idx.iter().zip(val) {
                if v != 0.0 {
                    any = true;
                    col_seen[j] = true;
                }
            }
            if !any {
                return Err(HpsError::StructurallySingular(format!("row {i} is empty")));
            }
        }
        if let Some(j) = col_seen.iter().position(|s| !s) {
            return Err(HpsError::StructurallySingular(format!("column {j} is empty")));
        }
        Ok(())
    }

    /// Writes `row col value` lines (0-based) after a `%` header line holding
    /// the shape. Values use the shortest representation that round-trips.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "% {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                writeln!(w, "{i} {j} {v:?}")?;
            }
        }
        Ok(())
    }

    /// Reads the format produced by [`write_coordinate`](Self::write_coordinate).
    /// Without a header the shape is inferred from the largest indices.
    pub fn read_coordinate<R: BufRead>(r: R) -> Result<Self> {
        let mut shape: Option<(usize, usize)> = None;
        let mut t = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| HpsError::InvalidProblem(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || HpsError::InvalidProblem(format!("line {}: cannot parse '{line}'", lineno + 1));
            if let Some(rest) = line.strip_prefix('%') {
                let f: Vec<usize> = rest.split_whitespace().filter_map(|s| s.parse().ok()).collect();
                if f.len() >= 2 && shape.is_none() {
                    shape = Some((f[0], f[1]));
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let i: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let j: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            t.push((i, j, v));
        }
        let (nr, nc) = shape.unwrap_or_else(|| {
            let nr = t.iter().map(|e| e.0 + 1).max().unwrap_or(0);
            let nc = t.iter().map(|e| e.1 + 1).max().unwrap_or(0);
            (nr, nc)
        });
        Self::from_triplets(nr, nc, &t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Ordering {
    Natural,
    #[default]
    MinimumDegree,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorOptions {
    pub ordering: Ordering,
    /// Relative threshold `u` in (0, 1]: a pivot is acceptable when its
    /// magnitude is at least `u` times the largest entry in its column.
    pub pivot_threshold: f64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            ordering: Ordering::MinimumDegree,
            pivot_threshold: 0.1,
        }
    }
}

/// Diagnostics gathered during numeric factorization.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FactorStats {
    pub n: usize,
    pub ordering: Ordering,
    /// Stored entries of L and U together.
    pub nnz_factors: usize,
    pub min_pivot: f64,
    /// Largest |U| entry over largest |A| entry.
    pub growth: f64,
    pub delayed_pivots: usize,
    pub fronts: usize,
    pub max_front: usize,
}

/// A factorized square matrix usable for repeated solves.
pub trait Factorization: Send + Sync + Debug {
    fn n(&self) -> usize;
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>>;
    /// Solves for every column of the `n × r` block `b`.
    fn solve_multi(&self, b: &Mat) -> Result<Mat>;
    fn stats(&self) -> &FactorStats;
}

/// A sparse direct solver. Implementations replace the built-in
/// multifrontal code without touching the interface assembly.
pub trait SparseBackend: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn analyze_and_factor(&self, m: &SparseMatrix, options: &FactorOptions) -> Result<Box<dyn Factorization>>;
}

/// Factorizes with the built-in multifrontal backend.
pub fn analyze_and_factor(m: &SparseMatrix, options: &FactorOptions) -> Result<Box<dyn Factorization>> {
    MultifrontalBackend.analyze_and_factor(m, options)
}

/// Dense LU of the whole matrix; a reference backend for small systems.
#[derive(Clone, Copy, Debug, Default)]
pub struct DenseBackend;

#[derive(Debug)]
struct DenseFactorization {
    lu: DenseLu,
    stats: FactorStats,
}

impl SparseBackend for DenseBackend {
    fn name(&self) -> &str {
        "dense"
    }

    fn analyze_and_factor(&self, m: &SparseMatrix, options: &FactorOptions) -> Result<Box<dyn Factorization>> {
        if m.nrows() != m.ncols() {
            return Err(HpsError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
                context: "dense factorization needs a square matrix",
            });
        }
        m.check_structure()?;
        let n = m.n();
        let lu = DenseLu::factor(m.to_dense())?;
        let stats = FactorStats {
            n,
            ordering: options.ordering,
            nnz_factors: n * n,
            min_pivot: lu.min_pivot(),
            growth: 0.0,
            delayed_pivots: 0,
            fronts: 1,
            max_front: n,
        };
        Ok(Box::new(DenseFactorization { lu, stats }))
    }
}

impl Factorization for DenseFactorization {
    fn n(&self) -> usize {
        self.lu.n()
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n() {
            return Err(HpsError::DimensionMismatch {
                expected: self.n(),
                got: b.len(),
                context: "right-hand side length",
            });
        }
        Ok(self.lu.solve(b))
    }

    fn solve_multi(&self, b: &Mat) -> Result<Mat> {
        if b.rows() != self.n() {
            return Err(HpsError::DimensionMismatch {
                expected: self.n(),
                got: b.rows(),
                context: "right-hand side rows",
            });
        }
        Ok(self.lu.solve_mat(b))
    }

    fn stats(&self) -> &FactorStats {
        &self.stats
    }
}
