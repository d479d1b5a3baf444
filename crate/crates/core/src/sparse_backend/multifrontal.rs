//! Multifrontal LU with threshold partial pivoting and delayed pivots.
//!
//! The symbolic phase works on the symmetrized pattern: variables with equal
//! closed neighborhoods that are adjacent in the elimination order form
//! groups, the elimination tree and column structures are computed per group,
//! and chains of groups with nested structure are merged into supernodes.
//! Each supernode's frontal matrix is assembled from original entries and the
//! children's contribution blocks, partially factorized with
//! [`partial_factor`], and its Schur complement passed up the tree. Columns
//! without an acceptable pivot are delayed to the parent front.

use super::ordering::{minimum_degree, SymPattern};
use super::{FactorOptions, FactorStats, Factorization, Ordering, SparseBackend, SparseMatrix};
use crate::dense::{gemm_raw, partial_factor, solve_unit_lower, solve_upper, Mat};
use crate::error::{HpsError, Result};

/// The built-in sparse direct solver.
#[derive(Clone, Copy, Debug, Default)]
pub struct MultifrontalBackend;

impl SparseBackend for MultifrontalBackend {
    fn name(&self) -> &str {
        "multifrontal"
    }

    fn analyze_and_factor(
        &self,
        m: &SparseMatrix,
        options: &FactorOptions,
    ) -> Result<Box<dyn Factorization>> {
        Ok(Box::new(MultifrontalLu::factor(m, options)?))
    }
}

struct Symbolic {
    /// Elimination order: `perm[k]` is the variable at position `k`.
    perm: Vec<usize>,
    pos: Vec<usize>,
    /// Position ranges of supernodes, in postorder.
    snode_ranges: Vec<(usize, usize)>,
    /// Positions of each supernode's off-diagonal structure, ascending.
    snode_struct: Vec<Vec<usize>>,
    snode_parent: Vec<Option<usize>>,
}

fn symbolic(a: &SparseMatrix, ordering: Ordering) -> Symbolic {
    let n = a.nrows();
    let pat = SymPattern::from_matrix(a);
    let perm0 = match ordering {
        Ordering::Natural => (0..n).collect(),
        Ordering::MinimumDegree => minimum_degree(&pat),
    };
    let (class, _) = pat.supervariables();

    // Groups: maximal runs of one supervariable in the elimination order.
    let mut group_start = Vec::new();
    for k in 0..n {
        if k == 0 || class[perm0[k]] != class[perm0[k - 1]] {
            group_start.push(k);
        }
    }
    let ng = group_start.len();
    group_start.push(n);
    let mut pos0 = vec![0usize; n];
    for (k, &v) in perm0.iter().enumerate() {
        pos0[v] = k;
    }
    let mut group_of_pos = vec![0u32; n];
    for g in 0..ng {
        for k in group_start[g]..group_start[g + 1] {
            group_of_pos[k] = g as u32;
        }
    }

    // Group structures and elimination tree.
    let mut gstruct: Vec<Vec<u32>> = Vec::with_capacity(ng);
    let mut gparent: Vec<Option<usize>> = vec![None; ng];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); ng];
    let mut mark = vec![usize::MAX; ng];
    for g in 0..ng {
        let mut s: Vec<u32> = Vec::new();
        mark[g] = g;
        let v = perm0[group_start[g]];
        for &w in pat.neighbors(v) {
            let h = group_of_pos[pos0[w as usize]];
            if h as usize > g && mark[h as usize] != g {
                mark[h as usize] = g;
                s.push(h);
            }
        }
        for &c in &children[g] {
            for &h in &gstruct[c] {
                if h as usize > g && mark[h as usize] != g {
                    mark[h as usize] = g;
                    s.push(h);
                }
            }
        }
        s.sort_unstable();
        if let Some(&p) = s.first() {
            gparent[g] = Some(p as usize);
            children[p as usize].push(g);
        }
        gstruct.push(s);
    }
    // Free children's structures that are no longer needed is not worth it
    // at these sizes; keep everything for the relabeling below.

    // Postorder of the group forest.
    let mut post = Vec::with_capacity(ng);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in (0..ng).filter(|&g| gparent[g].is_none()) {
        stack.push((root, 0));
        while let Some(&mut (g, ref mut next)) = stack.last_mut() {
            if *next < children[g].len() {
                let c = children[g][*next];
                *next += 1;
                stack.push((c, 0));
            } else {
                post.push(g);
                stack.pop();
            }
        }
    }
    let mut new_of_old = vec![0usize; ng];
    for (k, &g) in post.iter().enumerate() {
        new_of_old[g] = k;
    }

    // Relabel groups and variables.
    let mut perm = Vec::with_capacity(n);
    let mut gstart_new = Vec::with_capacity(ng + 1);
    for &g in &post {
        gstart_new.push(perm.len());
        perm.extend_from_slice(&perm0[group_start[g]..group_start[g + 1]]);
    }
    gstart_new.push(n);
    let mut pos = vec![0usize; n];
    for (k, &v) in perm.iter().enumerate() {
        pos[v] = k;
    }
    let gs: Vec<Vec<u32>> = post
        .iter()
        .map(|&g| {
            let mut s: Vec<u32> = gstruct[g].iter().map(|&h| new_of_old[h as usize] as u32).collect();
            s.sort_unstable();
            s
        })
        .collect();
    let gp: Vec<Option<usize>> = post.iter().map(|&g| gparent[g].map(|p| new_of_old[p])).collect();
    let mut nchild = vec![0usize; ng];
    for p in gp.iter().flatten() {
        nchild[*p] += 1;
    }

    // Fundamental supernodes: a group joins its only child when the child's
    // structure is exactly {group} ∪ struct(group).
    let mut snode_of_group = vec![0usize; ng];
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut last_group: Vec<usize> = Vec::new();
    for g in 0..ng {
        let merge = g > 0
            && nchild[g] == 1
            && gp[g - 1] == Some(g)
            && gs[g - 1].len() == gs[g].len() + 1;
        if merge {
            let s = snode_of_group[g - 1];
            snode_of_group[g] = s;
            ranges[s].1 = gstart_new[g + 1];
            last_group[s] = g;
        } else {
            snode_of_group[g] = ranges.len();
            ranges.push((gstart_new[g], gstart_new[g + 1]));
            last_group.push(g);
        }
    }
    let snode_struct: Vec<Vec<usize>> = last_group
        .iter()
        .map(|&g| {
            let mut v = Vec::new();
            for &h in &gs[g] {
                v.extend(gstart_new[h as usize]..gstart_new[h as usize + 1]);
            }
            v
        })
        .collect();
    let snode_parent = last_group
        .iter()
        .map(|&g| gp[g].map(|p| snode_of_group[p]))
        .collect();

    Symbolic {
        perm,
        pos,
        snode_ranges: ranges,
        snode_struct,
        snode_parent,
    }
}

/// Factor data of one front.
#[derive(Debug)]
struct FrontFactor {
    /// Pivot rows and columns (original indices), in pivot order.
    piv_rows: Vec<usize>,
    piv_cols: Vec<usize>,
    /// Rows below the pivot block and columns right of it.
    lower_rows: Vec<usize>,
    upper_cols: Vec<usize>,
    /// `npiv × npiv` packed L\U of the pivot block.
    lu11: Vec<f64>,
    /// `lower_rows × npiv`.
    l21: Vec<f64>,
    /// `npiv × upper_cols`.
    u12: Vec<f64>,
}

struct Contribution {
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// Leading rows/cols that are still fully summed (delayed pivots).
    delayed_rows: usize,
    delayed_cols: usize,
    values: Vec<f64>,
}

/// Factorization produced by [`MultifrontalBackend`].
#[derive(Debug)]
pub struct MultifrontalLu {
    n: usize,
    fronts: Vec<FrontFactor>,
    stats: FactorStats,
}

impl MultifrontalLu {
    pub fn factor(a: &SparseMatrix, options: &FactorOptions) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(HpsError::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
                context: "sparse factorization needs a square matrix",
            });
        }
        let n = a.nrows();
        a.check_structure()?;
        let u = options.pivot_threshold;
        if !(u > 0.0 && u <= 1.0) {
            return Err(HpsError::InvalidProblem(format!(
                "pivot threshold must lie in (0, 1], got {u}"
            )));
        }
        let sym = symbolic(a, options.ordering);
        let at = a.transpose();
        let amax = a.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let ns = sym.snode_ranges.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); ns];
        for (s, p) in sym.snode_parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(s);
            }
        }
        let mut cbs: Vec<Option<Contribution>> = (0..ns).map(|_| None).collect();
        let mut fronts = Vec::with_capacity(ns);
        let mut row_map = vec![usize::MAX; n];
        let mut col_map = vec![usize::MAX; n];
        let mut stats = FactorStats {
            n,
            ordering: options.ordering,
            fronts: ns,
            min_pivot: f64::INFINITY,
            ..FactorStats::default()
        };
        let mut umax = 0.0_f64;
        let mut done = 0usize;

        for s in 0..ns {
            let (p0, p1) = sym.snode_ranges[s];
            let own: Vec<usize> = sym.perm[p0..p1].to_vec();
            let kids: Vec<Contribution> = children[s]
                .iter()
                .map(|&c| cbs[c].take().expect("child contribution present"))
                .collect();

            let mut rows = own.clone();
            let mut cols = own.clone();
            for cb in &kids {
                rows.extend_from_slice(&cb.rows[..cb.delayed_rows]);
                cols.extend_from_slice(&cb.cols[..cb.delayed_cols]);
            }
            let fs_rows = rows.len();
            let fs_cols = cols.len();
            for &q in &sym.snode_struct[s] {
                rows.push(sym.perm[q]);
                cols.push(sym.perm[q]);
            }
            let (m, nc) = (rows.len(), cols.len());
            for (k, &r) in rows.iter().enumerate() {
                row_map[r] = k;
            }
            for (k, &c) in cols.iter().enumerate() {
                col_map[c] = k;
            }

            let mut front = vec![0.0; m * nc];
            for &v in &own {
                let pv = sym.pos[v];
                let (idx, val) = a.row(v);
                let lr = row_map[v];
                for (&j, &x) in idx.iter().zip(val) {
                    if sym.pos[j] >= pv {
                        front[lr * nc + col_map[j]] += x;
                    }
                }
                let (idx, val) = at.row(v);
                let lc = col_map[v];
                for (&i, &x) in idx.iter().zip(val) {
                    if sym.pos[i] > pv {
                        front[row_map[i] * nc + lc] += x;
                    }
                }
            }
            for cb in &kids {
                let w = cb.cols.len();
                let cmap: Vec<usize> = cb.cols.iter().map(|&c| col_map[c]).collect();
                for (r, &gr) in cb.rows.iter().enumerate() {
                    let dst = row_map[gr] * nc;
                    let src = &cb.values[r * w..(r + 1) * w];
                    for (x, &lc) in src.iter().zip(&cmap) {
                        front[dst + lc] += x;
                    }
                }
            }
            drop(kids);

            let pf = partial_factor(&mut front, m, nc, fs_rows, fs_cols, u);
            let npiv = pf.npiv;
            let is_root = sym.snode_parent[s].is_none();
            if is_root && (npiv < fs_rows || npiv < fs_cols) {
                return Err(HpsError::NumericallySingular { step: done + npiv });
            }
            done += npiv;
            if npiv > 0 {
                stats.min_pivot = stats.min_pivot.min(pf.min_pivot);
            }
            stats.delayed_pivots += fs_cols - npiv;
            stats.max_front = stats.max_front.max(m.max(nc));

            let prow: Vec<usize> = pf.row_order.iter().map(|&k| rows[k]).collect();
            let pcol: Vec<usize> = pf.col_order.iter().map(|&k| cols[k]).collect();
            let mut lu11 = Vec::with_capacity(npiv * npiv);
            let mut u12 = Vec::with_capacity(npiv * (nc - npiv));
            for i in 0..npiv {
                let row = &front[i * nc..(i + 1) * nc];
                lu11.extend_from_slice(&row[..npiv]);
                u12.extend_from_slice(&row[npiv..]);
                umax = row[i..].iter().fold(umax, |acc, v| acc.max(v.abs()));
            }
            let mut l21 = Vec::with_capacity((m - npiv) * npiv);
            for i in npiv..m {
                l21.extend_from_slice(&front[i * nc..i * nc + npiv]);
            }
            stats.nnz_factors += npiv * npiv + l21.len() + u12.len();

            if !is_root {
                let mut values = Vec::with_capacity((m - npiv) * (nc - npiv));
                for i in npiv..m {
                    values.extend_from_slice(&front[i * nc + npiv..(i + 1) * nc]);
                }
                cbs[s] = Some(Contribution {
                    rows: prow[npiv..].to_vec(),
                    cols: pcol[npiv..].to_vec(),
                    delayed_rows: fs_rows - npiv,
                    delayed_cols: fs_cols - npiv,
                    values,
                });
            }
            for &r in &rows {
                row_map[r] = usize::MAX;
            }
            for &c in &cols {
                col_map[c] = usize::MAX;
            }
            fronts.push(FrontFactor {
                piv_rows: prow[..npiv].to_vec(),
                piv_cols: pcol[..npiv].to_vec(),
                lower_rows: prow[npiv..].to_vec(),
                upper_cols: pcol[npiv..].to_vec(),
                lu11,
                l21,
                u12,
            });
        }
        if n == 0 {
            stats.min_pivot = 0.0;
        }
        stats.growth = if amax > 0.0 { umax / amax } else { 0.0 };
        Ok(Self { n, fronts, stats })
    }

    fn solve_block(&self, b: &mut [f64], r: usize) {
        let mut work: Vec<f64> = Vec::new();
        let mut tmp: Vec<f64> = Vec::new();
        // Forward: L y = P b, y stored in place of the pivot rows of b.
        for f in &self.fronts {
            let np = f.piv_rows.len();
            if np == 0 {
                continue;
            }
            work.clear();
            for &i in &f.piv_rows {
                work.extend_from_slice(&b[i * r..(i + 1) * r]);
            }
            solve_unit_lower(&f.lu11, np, np, &mut work, r);
            let nl = f.lower_rows.len();
            if nl > 0 {
                tmp.clear();
                tmp.resize(nl * r, 0.0);
                // SAFETY: distinct buffers with the stated extents.
                unsafe {
                    gemm_raw(nl, np, r, 1.0, f.l21.as_ptr(), np, work.as_ptr(), r, 0.0, tmp.as_mut_ptr(), r);
                }
                for (k, &i) in f.lower_rows.iter().enumerate() {
                    for (x, y) in b[i * r..(i + 1) * r].iter_mut().zip(&tmp[k * r..(k + 1) * r]) {
                        *x -= y;
                    }
                }
            }
            for (k, &i) in f.piv_rows.iter().enumerate() {
                b[i * r..(i + 1) * r].copy_from_slice(&work[k * r..(k + 1) * r]);
            }
        }
        // The forward values live at pivot-row slots; move them to the
        // matching pivot-column slots while solving U x = y backwards.
        let mut x = vec![0.0; self.n * r];
        for f in self.fronts.iter().rev() {
            let np = f.piv_rows.len();
            if np == 0 {
                continue;
            }
            work.clear();
            for &i in &f.piv_rows {
                work.extend_from_slice(&b[i * r..(i + 1) * r]);
            }
            let nu = f.upper_cols.len();
            if nu > 0 {
                tmp.clear();
                for &j in &f.upper_cols {
                    tmp.extend_from_slice(&x[j * r..(j + 1) * r]);
                }
                // SAFETY: distinct buffers with the stated extents.
                unsafe {
                    gemm_raw(np, nu, r, -1.0, f.u12.as_ptr(), nu, tmp.as_ptr(), r, 1.0, work.as_mut_ptr(), r);
                }
            }
            solve_upper(&f.lu11, np, np, &mut work, r);
            for (k, &j) in f.piv_cols.iter().enumerate() {
                x[j * r..(j + 1) * r].copy_from_slice(&work[k * r..(k + 1) * r]);
            }
        }
        b.copy_from_slice(&x);
    }
}

impl Factorization for MultifrontalLu {
    fn n(&self) -> usize {
        self.n
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(HpsError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
                context: "right-hand side length",
            });
        }
        let mut x = b.to_vec();
        self.solve_block(&mut x, 1);
        Ok(x)
    }

    fn solve_multi(&self, b: &Mat) -> Result<Mat> {
        if b.rows() != self.n {
            return Err(HpsError::DimensionMismatch {
                expected: self.n,
                got: b.rows(),
                context: "right-hand side rows",
            });
        }
        let r = b.cols();
        let mut x = b.as_slice().to_vec();
        if r > 0 {
            self.solve_block(&mut x, r);
        }
        Ok(Mat::from_vec(self.n, r, x))
    }

    fn stats(&self) -> &FactorStats {
        &self.stats
    }
}
