//! Per-leaf collocation operators, static condensation of a single leaf and
//! the Dirichlet-to-Neumann map.

pub mod spectral;

use std::sync::Arc;

use crate::dense::{gemm, DenseLu, Mat};
use crate::error::{HpsError, Result};
use crate::geometry::{CornerMode, ParameterMap};
use spectral::{cheb_diff_matrix, cheb_points, interp_1d_cheb_legendre, kron, map_to_interval};

pub use spectral::{cheb_nodes, face_interp_cheb_to_legendre};

/// Operator coefficients at one point, for
/// `L u = −Σ a_kl ∂_k∂_l u − Σ b_k ∂_k u + c u`.
///
/// Only the leading `d` entries are meaningful in `d` dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCoefficients {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub c: f64,
}

impl PointCoefficients {
    /// `−α Δ + c` in `d` dimensions.
    pub fn isotropic(d: usize, alpha: f64, c: f64) -> Self {
        let mut a = [[0.0; 3]; 3];
        for (k, row) in a.iter_mut().enumerate().take(d) {
            row[k] = alpha;
        }
        Self { a, b: [0.0; 3], c }
    }

    fn is_finite(&self) -> bool {
        self.a.iter().flatten().all(|v| v.is_finite())
            && self.b.iter().all(|v| v.is_finite())
            && self.c.is_finite()
    }

    fn has_cross(&self, d: usize) -> bool {
        (0..d).any(|k| (0..d).any(|l| k != l && self.a[k][l] != 0.0))
    }
}

type CoefFn = dyn Fn(&[f64]) -> PointCoefficients + Send + Sync;

/// Position-dependent operator coefficients.
#[derive(Clone)]
pub struct CoefficientField {
    dim: usize,
    cross: bool,
    f: Arc<CoefFn>,
}

impl std::fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientField")
            .field("dim", &self.dim)
            .field("cross", &self.cross)
            .finish()
    }
}

impl CoefficientField {
    /// `cross` declares whether mixed second derivatives appear.
    pub fn new(
        dim: usize,
        cross: bool,
        f: impl Fn(&[f64]) -> PointCoefficients + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            cross,
            f: Arc::new(f),
        }
    }

    /// `−Δ`.
    pub fn laplace(d: usize) -> Self {
        Self::new(d, false, move |_| PointCoefficients::isotropic(d, 1.0, 0.0))
    }

    /// `−Δ − κ²`.
    pub fn helmholtz(d: usize, kappa: f64) -> Self {
        let c = -kappa * kappa;
        Self::new(d, false, move |_| PointCoefficients::isotropic(d, 1.0, c))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_cross_terms(&self) -> bool {
        self.cross
    }

    pub fn eval(&self, x: &[f64]) -> PointCoefficients {
        (self.f)(x)
    }

    /// The operator pulled back to reference coordinates of `map`.
    pub fn mapped(self, map: ParameterMap) -> Self {
        let dim = self.dim;
        Self::new(dim, true, move |x| {
            let y = map.forward(x);
            map.transform(x, &self.eval(&y))
        })
    }

    /// Same field with a different cross-term declaration.
    pub fn with_cross_flag(mut self, cross: bool) -> Self {
        self.cross = cross;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Interior(u32),
    Boundary(u32),
    Dropped,
}

/// Everything about a leaf that depends only on its size, `p` and the corner
/// mode: differentiation matrices, index maps, the flux blocks `a_bi`, `a_bb`
/// and, for Legendre faces, the face interpolation operators.
#[derive(Debug)]
pub struct LeafTemplate {
    d: usize,
    p: usize,
    mode: CornerMode,
    t: Vec<f64>,
    d1: Vec<Mat>,
    d2: Vec<Mat>,
    slot: Vec<Slot>,
    interior_full: Vec<usize>,
    /// Full-grid index of each Chebyshev boundary node. In DropCorners mode
    /// these are exactly the retained boundary DOFs in local order.
    cheb_boundary_full: Vec<usize>,
    /// Maps retained boundary DOFs to Chebyshev boundary values (Legendre
    /// faces only).
    ext: Option<Mat>,
    a_bi: Mat,
    a_bb: Mat,
    n_b: usize,
}

impl LeafTemplate {
    /// `widths` are the leaf side lengths.
    pub fn new(p: usize, widths: &[f64], mode: CornerMode) -> Result<Arc<Self>> {
        let d = widths.len();
        if !(2..=3).contains(&d) {
            return Err(HpsError::InvalidDomain(format!("dimension {d} not supported")));
        }
        if p < 4 {
            return Err(HpsError::OrderTooSmall { p, min: 4 });
        }
        let t = cheb_points(p);
        let dref = cheb_diff_matrix(p)?;
        let d2ref = dref.matmul(&dref);
        let mut d1 = Vec::with_capacity(d);
        let mut d2 = Vec::with_capacity(d);
        for &h in widths {
            let s = 2.0 / h;
            let mut a = dref.clone();
            a.scale(s);
            let mut b = d2ref.clone();
            b.scale(s * s);
            d1.push(a);
            d2.push(b);
        }

        let n_full = p.pow(d as u32);
        let idx_of = |full: usize| -> [usize; 3] { [full % p, (full / p) % p, full / (p * p)] };
        let on_boundary = |i: usize| i == 0 || i == p - 1;
        let mut slot = vec![Slot::Dropped; n_full];
        let mut interior_full = Vec::new();
        for (full, s) in slot.iter_mut().enumerate() {
            let idx = idx_of(full);
            if (0..d).all(|k| !on_boundary(idx[k])) {
                *s = Slot::Interior(interior_full.len() as u32);
                interior_full.push(full);
            }
        }

        let strides = [1, p, p * p];
        // Full-grid nodes of each face in face-DOF order (first tangential axis
        // fastest), for the given tangential index range.
        let face_nodes = |axis: usize, side: usize, range: std::ops::Range<usize>| -> Vec<usize> {
            let tang: Vec<usize> = (0..d).filter(|&k| k != axis).collect();
            let m = range.len();
            let count = m.pow(d as u32 - 1);
            let fixed = if side == 0 { 0 } else { p - 1 };
            (0..count)
                .map(|q| {
                    let mut full = fixed * strides[axis];
                    let mut r = q;
                    for &k in &tang {
                        full += (range.start + r % m) * strides[k];
                        r /= m;
                    }
                    full
                })
                .collect()
        };

        let mut cheb_boundary_full = Vec::new();
        match mode {
            CornerMode::DropCorners => {
                for axis in 0..d {
                    for side in 0..2 {
                        for full in face_nodes(axis, side, 1..p - 1) {
                            slot[full] = Slot::Boundary(cheb_boundary_full.len() as u32);
                            cheb_boundary_full.push(full);
                        }
                    }
                }
            }
            CornerMode::LegendreFaces => {
                for (full, s) in slot.iter_mut().enumerate() {
                    if matches!(s, Slot::Dropped) {
                        *s = Slot::Boundary(cheb_boundary_full.len() as u32);
                        cheb_boundary_full.push(full);
                    }
                }
            }
        }
        let n_i = interior_full.len();
        let n_bc = cheb_boundary_full.len();

        // Outward normal-derivative rows at Chebyshev face nodes.
        let flux_rows = |axis: usize, side: usize, nodes: &[usize]| -> (Mat, Mat) {
            let sign = if side == 0 { -1.0 } else { 1.0 };
            let ik = if side == 0 { 0 } else { p - 1 };
            let mut bi = Mat::zeros(nodes.len(), n_i);
            let mut bb = Mat::zeros(nodes.len(), n_bc);
            for (r, &full) in nodes.iter().enumerate() {
                let base = full - ik * strides[axis];
                for j in 0..p {
                    let v = sign * d1[axis][(ik, j)];
                    match slot[base + j * strides[axis]] {
                        Slot::Interior(c) => bi[(r, c as usize)] += v,
                        Slot::Boundary(c) => bb[(r, c as usize)] += v,
                        Slot::Dropped => unreachable!("normal lines of face nodes stay on the grid"),
                    }
                }
            }
            (bi, bb)
        };

        let (a_bi, a_bb, ext, n_b) = match mode {
            CornerMode::DropCorners => {
                let mut bi_rows = Vec::new();
                let mut bb_rows = Vec::new();
                for axis in 0..d {
                    for side in 0..2 {
                        let (bi, bb) = flux_rows(axis, side, &face_nodes(axis, side, 1..p - 1));
                        bi_rows.push(bi);
                        bb_rows.push(bb);
                    }
                }
                (vstack(&bi_rows), vstack(&bb_rows), None, n_bc)
            }
            CornerMode::LegendreFaces => {
                let (fwd1, rev1) = interp_1d_cheb_legendre(p);
                let fwd = if d == 2 { fwd1.clone() } else { kron(&fwd1, &fwd1) };
                let q = p - 1;
                let nf = q.pow(d as u32 - 1);
                let n_b = 2 * d * nf;

                let mut ext = Mat::zeros(n_bc, n_b);
                for (row, &full) in cheb_boundary_full.iter().enumerate() {
                    let idx = idx_of(full);
                    let mut hits = Vec::new();
                    for axis in 0..d {
                        if idx[axis] == 0 {
                            hits.push((axis, 0));
                        }
                        if idx[axis] == p - 1 {
                            hits.push((axis, 1));
                        }
                    }
                    let w = 1.0 / hits.len() as f64;
                    for (axis, side) in hits {
                        let off = (2 * axis + side) * nf;
                        let tang: Vec<usize> = (0..d).filter(|&k| k != axis).collect();
                        if d == 2 {
                            let it = idx[tang[0]];
                            for a in 0..q {
                                ext[(row, off + a)] += w * rev1[(it, a)];
                            }
                        } else {
                            let (i0, i1) = (idx[tang[0]], idx[tang[1]]);
                            for b in 0..q {
                                for a in 0..q {
                                    ext[(row, off + a + q * b)] += w * rev1[(i0, a)] * rev1[(i1, b)];
                                }
                            }
                        }
                    }
                }

                let mut bi_rows = Vec::new();
                let mut bb_rows = Vec::new();
                for axis in 0..d {
                    for side in 0..2 {
                        let (bi, bb) = flux_rows(axis, side, &face_nodes(axis, side, 0..p));
                        bi_rows.push(fwd.matmul(&bi));
                        bb_rows.push(fwd.matmul(&bb).matmul(&ext));
                    }
                }
                (vstack(&bi_rows), vstack(&bb_rows), Some(ext), n_b)
            }
        };

        Ok(Arc::new(Self {
            d,
            p,
            mode,
            t,
            d1,
            d2,
            slot,
            interior_full,
            cheb_boundary_full,
            ext,
            a_bi,
            a_bb,
            n_b,
        }))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn corner_mode(&self) -> CornerMode {
        self.mode
    }

    pub fn n_interior(&self) -> usize {
        self.interior_full.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.n_b
    }

    /// Flux rows against interior values (`n_b × n_i`).
    pub fn a_bi(&self) -> &Mat {
        &self.a_bi
    }

    /// Flux rows against boundary DOFs (`n_b × n_b`).
    pub fn a_bb(&self) -> &Mat {
        &self.a_bb
    }

    /// Coordinates of the interior collocation nodes of the leaf `[lo, hi]`,
    /// `d` per node, in local interior order.
    pub fn interior_coords(&self, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        let (p, d) = (self.p, self.d);
        let mut out = Vec::with_capacity(self.n_interior() * d);
        for &full in &self.interior_full {
            let idx = [full % p, (full / p) % p, full / (p * p)];
            for k in 0..d {
                out.push(map_to_interval(self.t[idx[k]], lo[k], hi[k]));
            }
        }
        out
    }

    /// Interior collocation rows of the leaf `[lo, hi]`: `(A_ii, A_ib)` with
    /// `A_ib` acting on the retained boundary DOFs.
    pub fn interior_blocks(
        &self,
        lo: &[f64],
        hi: &[f64],
        coeffs: &CoefficientField,
    ) -> Result<(Mat, Mat)> {
        let (p, d) = (self.p, self.d);
        if coeffs.dim() != d || lo.len() != d || hi.len() != d {
            return Err(HpsError::DimensionMismatch {
                expected: d,
                got: coeffs.dim(),
                context: "coefficient field dimension",
            });
        }
        if coeffs.has_cross_terms() && self.mode == CornerMode::DropCorners {
            return Err(HpsError::CrossTermsRequireLegendre);
        }
        let n_i = self.n_interior();
        let n_bc = self.cheb_boundary_full.len();
        let mut aii = Mat::zeros(n_i, n_i);
        let mut aib = Mat::zeros(n_i, n_bc);
        let strides = [1, p, p * p];
        let coords = self.interior_coords(lo, hi);
        for (r, &full) in self.interior_full.iter().enumerate() {
            let idx = [full % p, (full / p) % p, full / (p * p)];
            let x = &coords[r * d..(r + 1) * d];
            let pc = coeffs.eval(x);
            if !pc.is_finite() {
                return Err(HpsError::NonFiniteCoefficient { point: x.to_vec() });
            }
            if pc.has_cross(d) && !coeffs.has_cross_terms() {
                return Err(HpsError::UndeclaredCrossTerms { point: x.to_vec() });
            }
            let mut add = |col: usize, v: f64| match self.slot[col] {
                Slot::Interior(j) => aii[(r, j as usize)] += v,
                Slot::Boundary(j) => aib[(r, j as usize)] += v,
                Slot::Dropped => debug_assert!(v == 0.0),
            };
            add(full, pc.c);
            for k in 0..d {
                let ik = idx[k];
                let base = full - ik * strides[k];
                let (akk, bk) = (pc.a[k][k], pc.b[k]);
                for j in 0..p {
                    let v = -akk * self.d2[k][(ik, j)] - bk * self.d1[k][(ik, j)];
                    if v != 0.0 {
                        add(base + j * strides[k], v);
                    }
                }
            }
            for k in 0..d {
                for l in k + 1..d {
                    let coef = -(pc.a[k][l] + pc.a[l][k]);
                    if coef == 0.0 {
                        continue;
                    }
                    let (ik, il) = (idx[k], idx[l]);
                    let base = full - ik * strides[k] - il * strides[l];
                    for j in 0..p {
                        let dk = coef * self.d1[k][(ik, j)];
                        for m in 0..p {
                            add(base + j * strides[k] + m * strides[l], dk * self.d1[l][(il, m)]);
                        }
                    }
                }
            }
        }
        let a_ib = match &self.ext {
            Some(e) => aib.matmul(e),
            None => aib,
        };
        Ok((aii, a_ib))
    }

    /// Factorized interior block and `a_ib`, enough for load reduction and
    /// interior reconstruction.
    pub fn solver(
        &self,
        leaf: usize,
        lo: &[f64],
        hi: &[f64],
        coeffs: &CoefficientField,
    ) -> Result<LeafSolver> {
        let (aii, a_ib) = self.interior_blocks(lo, hi, coeffs)?;
        let lu = factor_leaf(aii, leaf)?;
        Ok(LeafSolver { lu, a_ib })
    }

    /// All per-leaf operators including `S` and the DtN map.
    pub fn factors(
        self: &Arc<Self>,
        leaf: usize,
        lo: &[f64],
        hi: &[f64],
        coeffs: &CoefficientField,
    ) -> Result<LeafFactors> {
        let LeafSolver { lu, a_ib } = self.solver(leaf, lo, hi, coeffs)?;
        let mut s = lu.solve_mat(&a_ib);
        s.scale(-1.0);
        let mut dtn = self.a_bb.clone();
        gemm(1.0, &self.a_bi, &s, 1.0, &mut dtn);
        Ok(LeafFactors {
            leaf,
            a_ii: lu,
            a_ib,
            s,
            dtn,
            template: Arc::clone(self),
        })
    }
}

fn factor_leaf(aii: Mat, leaf: usize) -> Result<DenseLu> {
    DenseLu::factor(aii).map_err(|e| match e {
        HpsError::NumericallySingular { step } => HpsError::SingularLeaf { leaf, step },
        other => other,
    })
}

fn vstack(blocks: &[Mat]) -> Mat {
    let cols = blocks.first().map_or(0, Mat::cols);
    let rows = blocks.iter().map(Mat::rows).sum();
    let mut data = Vec::with_capacity(rows * cols);
    for b in blocks {
        data.extend_from_slice(b.as_slice());
    }
    Mat::from_vec(rows, cols, data)
}

/// Factorized interior block of one leaf with its interior-to-boundary
/// coupling.
#[derive(Clone, Debug)]
pub struct LeafSolver {
    lu: DenseLu,
    a_ib: Mat,
}

impl LeafSolver {
    pub fn a_ii(&self) -> &DenseLu {
        &self.lu
    }

    pub fn a_ib(&self) -> &Mat {
        &self.a_ib
    }

    /// `A_ii⁻¹ (f − a_ib u_b)`.
    pub fn interior_solve(&self, f: &[f64], u_b: &[f64]) -> Vec<f64> {
        let mut r = f.to_vec();
        for (ri, row) in r.iter_mut().zip(0..self.a_ib.rows()) {
            *ri -= crate::dense::dot(self.a_ib.row(row), u_b);
        }
        self.lu.solve(&r)
    }

    /// Applies the interior collocation rows: `A_ii u_i + a_ib u_b`.
    pub fn apply(&self, u_i: &[f64], u_b: &[f64]) -> Vec<f64> {
        let mut y = self.lu.apply(u_i);
        for (yi, row) in y.iter_mut().zip(0..self.a_ib.rows()) {
            *yi += crate::dense::dot(self.a_ib.row(row), u_b);
        }
        y
    }

    pub fn bytes(&self) -> usize {
        self.lu.bytes() + self.a_ib.bytes()
    }
}

/// Dense operators of one leaf after static condensation.
#[derive(Clone, Debug)]
pub struct LeafFactors {
    pub leaf: usize,
    pub a_ii: DenseLu,
    pub a_ib: Mat,
    /// Solution operator `−A_ii⁻¹ a_ib`.
    pub s: Mat,
    /// Dirichlet-to-Neumann map `a_bb + a_bi s`.
    pub dtn: Mat,
    template: Arc<LeafTemplate>,
}

impl LeafFactors {
    pub fn a_bi(&self) -> &Mat {
        self.template.a_bi()
    }

    pub fn a_bb(&self) -> &Mat {
        self.template.a_bb()
    }

    pub fn template(&self) -> &Arc<LeafTemplate> {
        &self.template
    }

    pub fn into_solver(self) -> LeafSolver {
        LeafSolver {
            lu: self.a_ii,
            a_ib: self.a_ib,
        }
    }
}

/// Builds the condensed operators for a single leaf `[lo, hi]`.
pub fn build_leaf_operator(
    lo: &[f64],
    hi: &[f64],
    p: usize,
    coeffs: &CoefficientField,
    corner_mode: CornerMode,
) -> Result<LeafFactors> {
    if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
        return Err(HpsError::InvalidDomain("leaf bounds need lo < hi".into()));
    }
    let widths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
    let tpl = LeafTemplate::new(p, &widths, corner_mode)?;
    tpl.factors(0, lo, hi, coeffs)
}
