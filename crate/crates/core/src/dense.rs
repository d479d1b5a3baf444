//! Row-major dense matrices and the LU kernels shared by the leaf solver and
//! the multifrontal backend.
//!
//! Matrix products go through `matrixmultiply`; everything else (pivoted
//! factorization, blocked triangular solves) lives here.

use std::ops::{Index, IndexMut};

use crate::error::{HpsError, Result};

/// Panel width of the blocked factorization and triangular solves.
const NB: usize = 48;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Wraps a row-major buffer. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length does not match shape");
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows, rhs.cols);
        gemm(1.0, self, rhs, 0.0, &mut out);
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_assign(&mut self, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Size of the payload in bytes.
    pub fn bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f64>()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `c ← alpha·a·b + beta·c`.
pub fn gemm(alpha: f64, a: &Mat, b: &Mat, beta: f64, c: &mut Mat) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert_eq!((c.rows, c.cols), (a.rows, b.cols), "output shape mismatch");
    // SAFETY: the three buffers are distinct allocations of the checked shapes.
    unsafe {
        gemm_raw(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr(),
            a.cols,
            b.data.as_ptr(),
            b.cols,
            beta,
            c.data.as_mut_ptr(),
            c.cols,
        );
    }
}

/// Row-major GEMM on raw blocks: `c[m×n] ← alpha·a[m×k]·b[k×n] + beta·c`.
///
/// # Safety
/// All three blocks must be valid for their extents and `c` must not share
/// any element with `a` or `b` (blocks of the same buffer are fine when their
/// elements are disjoint).
pub(crate) unsafe fn gemm_raw(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: *const f64,
    lda: usize,
    b: *const f64,
    ldb: usize,
    beta: f64,
    c: *mut f64,
    ldc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                let p = c.add(i * ldc + j);
                *p = if beta == 0.0 { 0.0 } else { beta * *p };
            }
        }
        return;
    }
    matrixmultiply::dgemm(
        m,
        k,
        n,
        alpha,
        a,
        lda as isize,
        1,
        b,
        ldb as isize,
        1,
        beta,
        c,
        ldc as isize,
        1,
    );
}

/// Outcome of [`partial_factor`].
#[derive(Clone, Debug)]
pub(crate) struct PartialFactor {
    pub npiv: usize,
    /// `row_order[k]` is the original local row now stored at position `k`.
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
    pub min_pivot: f64,
}

/// Blocked right-looking LU with threshold partial pivoting restricted to the
/// leading `fs_rows × fs_cols` (fully summed) part of an `nrows × ncols`
/// row-major matrix.
///
/// Pivot candidates for a column come from the fully summed rows only; a
/// candidate is accepted when its magnitude is at least `threshold` times the
/// largest magnitude anywhere in the remaining column. Columns without an
/// acceptable pivot are delayed. On return, rows and columns are permuted so
/// that the `npiv` pivots come first, delayed rows/columns follow, and the
/// trailing block `[npiv.., npiv..]` holds the Schur complement.
pub(crate) fn partial_factor(
    a: &mut [f64],
    nrows: usize,
    ncols: usize,
    fs_rows: usize,
    fs_cols: usize,
    threshold: f64,
) -> PartialFactor {
    assert_eq!(a.len(), nrows * ncols);
    assert!(fs_rows <= nrows && fs_cols <= ncols);
    let ld = ncols;
    let mut row_order: Vec<usize> = (0..nrows).collect();
    let mut col_order: Vec<usize> = (0..ncols).collect();
    let mut k = 0usize;
    let mut f_end = fs_cols;
    let mut min_pivot = f64::INFINITY;
    let mut last_retry = 0usize;

    loop {
        if k >= f_end || k >= fs_rows {
            // Columns rejected earlier have been kept up to date; retry them
            // while the previous pass made progress.
            if f_end < fs_cols && k < fs_rows && k > last_retry {
                last_retry = k;
                f_end = fs_cols;
                continue;
            }
            break;
        }
        let k0 = k;
        let c1 = (k0 + NB).min(f_end);
        for q in k0..c1 {
            if k >= fs_rows {
                break;
            }
            let mut best = 0.0_f64;
            let mut best_i = k;
            let mut amax = 0.0_f64;
            for i in k..nrows {
                let v = a[i * ld + q].abs();
                if i < fs_rows && v > best {
                    best = v;
                    best_i = i;
                }
                if v > amax {
                    amax = v;
                }
            }
            if !(best > 0.0) || best < threshold * amax {
                continue;
            }
            if best_i != k {
                swap_rows(a, ld, best_i, k);
                row_order.swap(best_i, k);
            }
            if q != k {
                swap_cols(a, nrows, ld, q, k);
                col_order.swap(q, k);
            }
            let (top, bottom) = a.split_at_mut((k + 1) * ld);
            let pivot = top[k * ld + k];
            min_pivot = min_pivot.min(pivot.abs());
            let prow = &top[k * ld + k + 1..k * ld + c1];
            for row in bottom.chunks_exact_mut(ld) {
                let l = row[k] / pivot;
                row[k] = l;
                if l != 0.0 {
                    for (x, y) in row[k + 1..c1].iter_mut().zip(prow) {
                        *x -= l * y;
                    }
                }
            }
            k += 1;
        }
        let k1 = k;

        if k1 > k0 && c1 < ncols {
            // U12 = L11⁻¹ A12 for the pivot rows of this panel.
            for r in k0 + 1..k1 {
                let (top, rest) = a.split_at_mut(r * ld);
                let row_r = &mut rest[..ld];
                for t in k0..r {
                    let l = row_r[t];
                    if l != 0.0 {
                        let row_t = &top[t * ld..(t + 1) * ld];
                        for (x, y) in row_r[c1..].iter_mut().zip(&row_t[c1..]) {
                            *x -= l * y;
                        }
                    }
                }
            }
            if k1 < nrows {
                let base = a.as_mut_ptr();
                // SAFETY: A = [k1.., k0..k1], B = [k0..k1, c1..], C = [k1.., c1..]
                // are element-disjoint blocks of one buffer (k1 <= c1).
                unsafe {
                    gemm_raw(
                        nrows - k1,
                        k1 - k0,
                        ncols - c1,
                        -1.0,
                        base.add(k1 * ld + k0),
                        ld,
                        base.add(k0 * ld + c1),
                        ld,
                        1.0,
                        base.add(k1 * ld + c1),
                        ld,
                    );
                }
            }
        }

        let rejected = c1 - k1;
        if rejected > 0 {
            if c1 < f_end {
                for row in a.chunks_exact_mut(ld) {
                    row[k1..f_end].rotate_left(rejected);
                }
                col_order[k1..f_end].rotate_left(rejected);
            }
            f_end -= rejected;
        }
    }

    PartialFactor {
        npiv: k,
        row_order,
        col_order,
        min_pivot,
    }
}

fn swap_rows(a: &mut [f64], ld: usize, i: usize, j: usize) {
    if i == j {
        return;
    }
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let (top, bottom) = a.split_at_mut(hi * ld);
    top[lo * ld..(lo + 1) * ld].swap_with_slice(&mut bottom[..ld]);
}

fn swap_cols(a: &mut [f64], nrows: usize, ld: usize, i: usize, j: usize) {
    for r in 0..nrows {
        a.swap(r * ld + i, r * ld + j);
    }
}

/// In-place `b ← L⁻¹ b` for the unit lower triangle of the leading `n × n`
/// block of `lu` (leading dimension `ld`); `b` is `n × r` row-major.
pub(crate) fn solve_unit_lower(lu: &[f64], ld: usize, n: usize, b: &mut [f64], r: usize) {
    debug_assert!(b.len() >= n * r);
    let mut i0 = 0;
    while i0 < n {
        let i1 = (i0 + NB).min(n);
        for i in i0 + 1..i1 {
            let (top, rest) = b.split_at_mut(i * r);
            let bi = &mut rest[..r];
            for t in i0..i {
                let l = lu[i * ld + t];
                if l != 0.0 {
                    for (x, y) in bi.iter_mut().zip(&top[t * r..(t + 1) * r]) {
                        *x -= l * y;
                    }
                }
            }
        }
        if i1 < n {
            let (top, bottom) = b.split_at_mut(i1 * r);
            // SAFETY: lu, top and bottom are distinct, in-bounds regions.
            unsafe {
                gemm_raw(
                    n - i1,
                    i1 - i0,
                    r,
                    -1.0,
                    lu.as_ptr().add(i1 * ld + i0),
                    ld,
                    top.as_ptr().add(i0 * r),
                    r,
                    1.0,
                    bottom.as_mut_ptr(),
                    r,
                );
            }
        }
        i0 = i1;
    }
}

/// In-place `b ← U⁻¹ b` for the upper triangle (with diagonal) of the leading
/// `n × n` block of `lu`.
pub(crate) fn solve_upper(lu: &[f64], ld: usize, n: usize, b: &mut [f64], r: usize) {
    debug_assert!(b.len() >= n * r);
    let mut i1 = n;
    while i1 > 0 {
        let i0 = i1.saturating_sub(NB);
        for i in (i0..i1).rev() {
            let (head, tail) = b.split_at_mut((i + 1) * r);
            let bi = &mut head[i * r..];
            for t in i + 1..i1 {
                let u = lu[i * ld + t];
                if u != 0.0 {
                    for (x, y) in bi.iter_mut().zip(&tail[(t - i - 1) * r..(t - i) * r]) {
                        *x -= u * y;
                    }
                }
            }
            let d = lu[i * ld + i];
            bi.iter_mut().for_each(|x| *x /= d);
        }
        if i0 > 0 {
            let (top, bottom) = b.split_at_mut(i0 * r);
            // SAFETY: distinct, in-bounds regions.
            unsafe {
                gemm_raw(
                    i0,
                    i1 - i0,
                    r,
                    -1.0,
                    lu.as_ptr().add(i0),
                    ld,
                    bottom.as_ptr(),
                    r,
                    1.0,
                    top.as_mut_ptr(),
                    r,
                );
            }
        }
        i1 = i0;
    }
}

/// Dense LU with partial pivoting: `A[row_order, col_order] = L·U`.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    row_order: Vec<usize>,
    col_order: Vec<usize>,
    min_pivot: f64,
}

impl DenseLu {
    /// Factorizes a square matrix. Fails with the elimination step at which no
    /// nonzero pivot remained.
    pub fn factor(a: Mat) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "DenseLu needs a square matrix");
        let n = a.rows;
        let mut lu = a.data;
        let pf = partial_factor(&mut lu, n, n, n, n, 1.0);
        if pf.npiv < n {
            return Err(HpsError::NumericallySingular { step: pf.npiv });
        }
        Ok(Self {
            n,
            lu,
            row_order: pf.row_order,
            col_order: pf.col_order,
            min_pivot: if n == 0 { 0.0 } else { pf.min_pivot },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn bytes(&self) -> usize {
        self.lu.len() * std::mem::size_of::<f64>()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.row_order.iter().map(|&i| b[i]).collect();
        solve_unit_lower(&self.lu, self.n, self.n, &mut y, 1);
        solve_upper(&self.lu, self.n, self.n, &mut y, 1);
        let mut x = vec![0.0; self.n];
        for (k, &c) in self.col_order.iter().enumerate() {
            x[c] = y[k];
        }
        x
    }

    /// Solves for every column of `b` at once.
    pub fn solve_mat(&self, b: &Mat) -> Mat {
        assert_eq!(b.rows, self.n);
        let r = b.cols;
        let mut y = vec![0.0; self.n * r];
        for (k, &i) in self.row_order.iter().enumerate() {
            y[k * r..(k + 1) * r].copy_from_slice(b.row(i));
        }
        solve_unit_lower(&self.lu, self.n, self.n, &mut y, r);
        solve_upper(&self.lu, self.n, self.n, &mut y, r);
        let mut x = Mat::zeros(self.n, r);
        for (k, &c) in self.col_order.iter().enumerate() {
            x.row_mut(c).copy_from_slice(&y[k * r..(k + 1) * r]);
        }
        x
    }

    /// Multiplies by the original (unfactored) matrix using the stored factors.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        let y: Vec<f64> = self.col_order.iter().map(|&c| x[c]).collect();
        let mut z = vec![0.0; n];
        for i in 0..n {
            z[i] = dot(&self.lu[i * n + i..(i + 1) * n], &y[i..]);
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let w = dot(&self.lu[i * n..i * n + i], &z[..i]) + z[i];
            out[self.row_order[i]] = w;
        }
        out
    }
}
