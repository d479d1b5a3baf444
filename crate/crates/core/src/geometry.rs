//! Box partitions, per-leaf node grids, global numbering and parameter maps.
//!
//! Global node ids are laid out as all leaf interiors (leaf by leaf), then the
//! interface DOFs, then the Dirichlet DOFs. Faces are enumerated by normal
//! axis, then plane index, then tangential box index (lowest axis fastest),
//! and each face owns a contiguous block of ids in its class.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{HpsError, Result};
use crate::local_ops::spectral::{cheb_points, gauss_legendre, map_to_interval};
use crate::local_ops::PointCoefficients;

#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(HpsError::InvalidDomain(format!(
                "lo has {} coordinates but hi has {}",
                lo.len(),
                hi.len()
            )));
        }
        if !(2..=3).contains(&lo.len()) {
            return Err(HpsError::InvalidDomain(format!(
                "dimension must be 2 or 3, got {}",
                lo.len()
            )));
        }
        for k in 0..lo.len() {
            if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                return Err(HpsError::InvalidDomain(format!(
                    "axis {k}: need finite lo < hi, got [{}, {}]",
                    lo[k], hi[k]
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The unit square or cube.
    pub fn unit(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d], vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// True when `x` lies in the closed box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CornerMode {
    /// Interface DOFs are the face-interior Chebyshev nodes; edge and corner
    /// nodes take no part in the discretization.
    DropCorners,
    /// Interface DOFs live on Gauss–Legendre face grids; Chebyshev boundary
    /// values are obtained by interpolation.
    LegendreFaces,
}

impl std::str::FromStr for CornerMode {
    type Err = HpsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "dropcorners" | "drop" => Ok(Self::DropCorners),
            "legendrefaces" | "legendre" => Ok(Self::LegendreFaces),
            _ => Err(HpsError::InvalidMesh(format!("unknown corner mode '{s}'"))),
        }
    }
}

impl std::fmt::Display for CornerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::DropCorners => "drop-corners",
            Self::LegendreFaces => "legendre-faces",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshConfig {
    pub boxes_per_dim: Vec<usize>,
    pub p: usize,
    pub corner_mode: CornerMode,
}

impl MeshConfig {
    pub fn new(boxes_per_dim: Vec<usize>, p: usize, corner_mode: CornerMode) -> Self {
        Self {
            boxes_per_dim,
            p,
            corner_mode,
        }
    }

    pub fn uniform(d: usize, boxes: usize, p: usize, corner_mode: CornerMode) -> Self {
        Self::new(vec![boxes; d], p, corner_mode)
    }

    pub fn leaf_count(&self) -> usize {
        self.boxes_per_dim.iter().product()
    }
}

/// One leaf box of the partition.
#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    pub index: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// What lies across a leaf face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Leaf(usize),
    Dirichlet,
}

/// A face of the partition, shared by one or two leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub axis: usize,
    pub plane: usize,
    /// Box indices along the tangential axes (increasing axis order).
    pub tangential: Vec<usize>,
    /// Leaf on the low side (`index[axis] = plane - 1`) and on the high side.
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    /// First global id of this face's DOF block.
    pub first_dof: usize,
}

impl Face {
    pub fn is_interface(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct Discretization {
    domain: DomainBox,
    mesh: MeshConfig,
    leaves: Vec<Leaf>,
    faces: Vec<Face>,
    /// Global face id of each leaf face in the order −x, +x, −y, +y[, −z, +z].
    leaf_faces: Vec<Vec<usize>>,
    nodes: Vec<f64>,
    n_interior_per_leaf: usize,
    n_interface: usize,
    n_dirichlet: usize,
    face_dofs: usize,
    /// Face (global id) owning each interface / Dirichlet id, offset from the
    /// start of the interface block.
    boundary_owner: Vec<u32>,
}

/// Coordinate of a partition plane, computed identically for every leaf that
/// touches it.
fn plane_coord(domain: &DomainBox, boxes: &[usize], axis: usize, plane: usize) -> f64 {
    let n = boxes[axis];
    if plane == n {
        domain.hi[axis]
    } else {
        let (a, b) = (domain.lo[axis], domain.hi[axis]);
        a + (b - a) * plane as f64 / n as f64
    }
}

/// Face-node positions along one tangential axis on [-1, 1].
fn face_reference_points(p: usize, mode: CornerMode) -> Vec<f64> {
    match mode {
        CornerMode::DropCorners => {
            let t = cheb_points(p);
            t[1..p - 1].to_vec()
        }
        CornerMode::LegendreFaces => gauss_legendre(p - 1).0,
    }
}

pub fn build_discretization(domain: DomainBox, mesh: MeshConfig) -> Result<Discretization> {
    let d = domain.dim();
    if mesh.boxes_per_dim.len() != d {
        return Err(HpsError::InvalidMesh(format!(
            "boxes_per_dim has {} entries for a {d}-dimensional domain",
            mesh.boxes_per_dim.len()
        )));
    }
    if mesh.boxes_per_dim.contains(&0) {
        return Err(HpsError::InvalidMesh("every axis needs at least one box".into()));
    }
    if mesh.p < 4 {
        return Err(HpsError::OrderTooSmall { p: mesh.p, min: 4 });
    }
    let p = mesh.p;
    let boxes = mesh.boxes_per_dim.clone();
    let n_leaves: usize = boxes.iter().product();

    let mut leaves = Vec::with_capacity(n_leaves);
    for l in 0..n_leaves {
        let index = unravel(l, &boxes);
        let lo = (0..d).map(|k| plane_coord(&domain, &boxes, k, index[k])).collect();
        let hi = (0..d).map(|k| plane_coord(&domain, &boxes, k, index[k] + 1)).collect();
        leaves.push(Leaf { index, lo, hi });
    }

    let n_i = (p - 2).pow(d as u32);
    let face_pts = face_reference_points(p, mesh.corner_mode);
    let nf = face_pts.len().pow(d as u32 - 1);

    // Enumerate faces; leaves are attached afterwards.
    let mut faces = Vec::new();
    for axis in 0..d {
        let tang_dims: Vec<usize> = (0..d).filter(|&k| k != axis).map(|k| boxes[k]).collect();
        let n_tang: usize = tang_dims.iter().product();
        for plane in 0..=boxes[axis] {
            for t in 0..n_tang {
                let tangential = unravel(t, &tang_dims);
                let mut idx = vec![0; d];
                let mut ti = tangential.iter();
                for k in 0..d {
                    if k != axis {
                        idx[k] = *ti.next().unwrap();
                    }
                }
                let lower = (plane > 0).then(|| {
                    let mut j = idx.clone();
                    j[axis] = plane - 1;
                    ravel(&j, &boxes)
                });
                let upper = (plane < boxes[axis]).then(|| {
                    let mut j = idx.clone();
                    j[axis] = plane;
                    ravel(&j, &boxes)
                });
                faces.push(Face {
                    axis,
                    plane,
                    tangential,
                    lower,
                    upper,
                    first_dof: 0,
                });
            }
        }
    }

    let n_int_total = n_leaves * n_i;
    let n_iface_faces = faces.iter().filter(|f| f.is_interface()).count();
    let n_interface = n_iface_faces * nf;
    let n_dirichlet = (faces.len() - n_iface_faces) * nf;
    let mut next_iface = n_int_total;
    let mut next_dir = n_int_total + n_interface;
    let mut boundary_owner = vec![0u32; n_interface + n_dirichlet];
    for (fid, f) in faces.iter_mut().enumerate() {
        let slot = if f.is_interface() { &mut next_iface } else { &mut next_dir };
        f.first_dof = *slot;
        for k in 0..nf {
            boundary_owner[*slot + k - n_int_total] = fid as u32;
        }
        *slot += nf;
    }

    let mut leaf_faces = vec![vec![0usize; 2 * d]; n_leaves];
    for (fid, f) in faces.iter().enumerate() {
        if let Some(l) = f.lower {
            leaf_faces[l][2 * f.axis + 1] = fid;
        }
        if let Some(l) = f.upper {
            leaf_faces[l][2 * f.axis] = fid;
        }
    }

    // Node table.
    let total = n_int_total + n_interface + n_dirichlet;
    let mut nodes = vec![0.0; total * d];
    let t = cheb_points(p);
    let inner = &t[1..p - 1];
    for (l, leaf) in leaves.iter().enumerate() {
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|k| inner.iter().map(|&s| map_to_interval(s, leaf.lo[k], leaf.hi[k])).collect())
            .collect();
        let m = p - 2;
        for q in 0..n_i {
            let id = l * n_i + q;
            let mut r = q;
            for k in 0..d {
                nodes[id * d + k] = axes[k][r % m];
                r /= m;
            }
        }
    }
    let m = face_pts.len();
    for f in &faces {
        let tang_axes: Vec<usize> = (0..d).filter(|&k| k != f.axis).collect();
        let coords: Vec<Vec<f64>> = tang_axes
            .iter()
            .zip(&f.tangential)
            .map(|(&k, &b)| {
                let a0 = plane_coord(&domain, &boxes, k, b);
                let a1 = plane_coord(&domain, &boxes, k, b + 1);
                face_pts.iter().map(|&s| map_to_interval(s, a0, a1)).collect()
            })
            .collect();
        let xn = plane_coord(&domain, &boxes, f.axis, f.plane);
        for q in 0..nf {
            let id = f.first_dof + q;
            nodes[id * d + f.axis] = xn;
            let mut r = q;
            for (j, &k) in tang_axes.iter().enumerate() {
                nodes[id * d + k] = coords[j][r % m];
                r /= m;
            }
        }
    }

    Ok(Discretization {
        domain,
        mesh,
        leaves,
        faces,
        leaf_faces,
        nodes,
        n_interior_per_leaf: n_i,
        n_interface,
        n_dirichlet,
        face_dofs: nf,
        boundary_owner,
    })
}

/// Neighbors across each face of `leaf`, in the order −x, +x, −y, +y[, −z, +z].
pub fn leaf_neighbors(disc: &Discretization, leaf: usize) -> Result<Vec<(usize, Neighbor)>> {
    disc.check_leaf(leaf)?;
    Ok(disc.leaf_faces[leaf]
        .iter()
        .enumerate()
        .map(|(j, &fid)| {
            let f = &disc.faces[fid];
            let other = if j % 2 == 0 { f.lower } else { f.upper };
            (fid, other.map_or(Neighbor::Dirichlet, Neighbor::Leaf))
        })
        .collect())
}

impl Discretization {
    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn mesh(&self) -> &MeshConfig {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn p(&self) -> usize {
        self.mesh.p
    }

    pub fn corner_mode(&self) -> CornerMode {
        self.mesh.corner_mode
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Global face ids of a leaf in local face order.
    pub fn leaf_faces(&self, leaf: usize) -> &[usize] {
        &self.leaf_faces[leaf]
    }

    /// Leaf width per axis.
    pub fn leaf_width(&self) -> Vec<f64> {
        let l = &self.leaves[0];
        l.lo.iter().zip(&l.hi).map(|(a, b)| b - a).collect()
    }

    pub(crate) fn check_leaf(&self, leaf: usize) -> Result<()> {
        if leaf >= self.leaves.len() {
            Err(HpsError::LeafOutOfRange {
                leaf,
                count: self.leaves.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn interior_per_leaf(&self) -> usize {
        self.n_interior_per_leaf
    }

    /// DOFs per face.
    pub fn face_dofs(&self) -> usize {
        self.face_dofs
    }

    /// Boundary DOFs per leaf.
    pub fn leaf_boundary_dofs(&self) -> usize {
        2 * self.dim() * self.face_dofs
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior_per_leaf * self.leaves.len()
    }

    pub fn n_interface(&self) -> usize {
        self.n_interface
    }

    pub fn n_dirichlet(&self) -> usize {
        self.n_dirichlet
    }

    /// Number of retained global nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_interior() + self.n_interface + self.n_dirichlet
    }

    pub fn interior_ids(&self, leaf: usize) -> Range<usize> {
        let n = self.n_interior_per_leaf;
        leaf * n..(leaf + 1) * n
    }

    pub fn interface_ids(&self) -> Range<usize> {
        let s = self.n_interior();
        s..s + self.n_interface
    }

    pub fn dirichlet_ids(&self) -> Range<usize> {
        let s = self.n_interior() + self.n_interface;
        s..s + self.n_dirichlet
    }

    /// Global ids of a leaf's retained boundary DOFs in local order.
    pub fn leaf_boundary_ids(&self, leaf: usize) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.leaf_boundary_dofs());
        for &fid in &self.leaf_faces[leaf] {
            let s = self.faces[fid].first_dof;
            ids.extend(s..s + self.face_dofs);
        }
        ids
    }

    /// Face id and face-local index of an interface or Dirichlet id.
    pub fn boundary_dof_owner(&self, id: usize) -> Option<(usize, usize)> {
        let off = id.checked_sub(self.n_interior())?;
        let fid = *self.boundary_owner.get(off)? as usize;
        Some((fid, id - self.faces[fid].first_dof))
    }

    /// Coordinates of node `id`.
    pub fn node(&self, id: usize) -> &[f64] {
        let d = self.dim();
        &self.nodes[id * d..(id + 1) * d]
    }

    /// Flattened node table, `dim()` coordinates per node.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

fn unravel(mut l: usize, dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .map(|&n| {
            let i = l % n;
            l /= n;
            i
        })
        .collect()
}

fn ravel(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).rev().fold(0, |acc, (&i, &n)| acc * n + i)
}

/// First and second derivatives of the reference coordinates with respect to
/// the physical coordinates, evaluated at a reference point.
///
/// `jac[m][k] = ∂x_m/∂y_k` and `hess[m][k][l] = ∂²x_m/∂y_k∂y_l`, where `x`
/// are reference and `y` physical coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseJet {
    pub jac: [[f64; 3]; 3],
    pub hess: [[[f64; 3]; 3]; 3],
}

/// Analytic geometry of a map from a reference box onto a physical domain.
pub trait MapGeometry: Send + Sync {
    fn dim(&self) -> usize;
    /// Reference point to physical point.
    fn forward(&self, x: &[f64]) -> Vec<f64>;
    fn inverse_jet(&self, x: &[f64]) -> InverseJet;
}

/// A parameter map together with the induced coefficient transform.
#[derive(Clone)]
pub struct ParameterMap {
    geometry: Arc<dyn MapGeometry>,
}

impl std::fmt::Debug for ParameterMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParameterMap").field("dim", &self.geometry.dim()).finish()
    }
}

struct IdentityMap(usize);

impl MapGeometry for IdentityMap {
    fn dim(&self) -> usize {
        self.0
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn inverse_jet(&self, _x: &[f64]) -> InverseJet {
        let mut jac = [[0.0; 3]; 3];
        for (k, row) in jac.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        InverseJet {
            jac,
            hess: [[[0.0; 3]; 3]; 3],
        }
    }
}

/// Physical domain `{(x₁, x₂/ψ(x₁), x₃)}` over a reference box, with
/// `ψ(z) = 1 − A sin(ωz)`.
struct SinusoidalMap {
    amplitude: f64,
    frequency: f64,
}

impl SinusoidalMap {
    fn psi(&self, z: f64) -> (f64, f64, f64) {
        let (a, w) = (self.amplitude, self.frequency);
        let (s, c) = (w * z).sin_cos();
        (1.0 - a * s, -a * w * c, a * w * w * s)
    }
}

impl MapGeometry for SinusoidalMap {
    fn dim(&self) -> usize {
        3
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (psi, _, _) = self.psi(x[0]);
        let mut y = x.to_vec();
        y[1] = x[1] / psi;
        y
    }

    fn inverse_jet(&self, x: &[f64]) -> InverseJet {
        // Reference x₂ = ψ(y₁)·y₂, the other coordinates are unchanged.
        let (psi, dpsi, ddpsi) = self.psi(x[0]);
        let y2 = x[1] / psi;
        let mut jac = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        jac[1][0] = dpsi * y2;
        jac[1][1] = psi;
        let mut hess = [[[0.0; 3]; 3]; 3];
        hess[1][0][0] = ddpsi * y2;
        hess[1][0][1] = dpsi;
        hess[1][1][0] = dpsi;
        InverseJet { jac, hess }
    }
}

impl ParameterMap {
    pub fn identity(d: usize) -> Self {
        Self::from_geometry(Arc::new(IdentityMap(d)))
    }

    pub fn from_geometry(geometry: Arc<dyn MapGeometry>) -> Self {
        Self { geometry }
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.geometry.forward(x)
    }

    /// Rewrites physical-space coefficients `phys` (evaluated at the image of
    /// the reference point `x`) as coefficients of the same operator acting on
    /// functions of the reference coordinates.
    pub fn transform(&self, x: &[f64], phys: &PointCoefficients) -> PointCoefficients {
        let d = self.dim();
        let InverseJet { jac, hess } = self.geometry.inverse_jet(x);
        let mut out = PointCoefficients {
            a: [[0.0; 3]; 3],
            b: [0.0; 3],
            c: phys.c,
        };
        for m in 0..d {
            for n in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        s += jac[m][k] * phys.a[k][l] * jac[n][l];
                    }
                }
                out.a[m][n] = s;
            }
            let mut s = 0.0;
            for k in 0..d {
                s += phys.b[k] * jac[m][k];
                for l in 0..d {
                    s += phys.a[k][l] * hess[m][k][l];
                }
            }
            out.b[m] = s;
        }
        out
    }
}

/// The sinusoidal parameter map with `ψ(z) = 1 − amplitude·sin(frequency·z)`.
pub fn sinusoidal_map(amplitude: f64, frequency: f64) -> Result<ParameterMap> {
    if !(amplitude.is_finite() && frequency.is_finite()) {
        return Err(HpsError::InvalidParameterMap("non-finite parameters".into()));
    }
    if amplitude.abs() >= 1.0 {
        return Err(HpsError::InvalidParameterMap(format!(
            "|amplitude| = {} lets psi vanish",
            amplitude.abs()
        )));
    }
    Ok(ParameterMap::from_geometry(Arc::new(SinusoidalMap {
        amplitude,
        frequency,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn disc(d: usize, boxes: &[usize], p: usize, mode: CornerMode) -> Discretization {
        build_discretization(
            DomainBox::unit(d).unwrap(),
            MeshConfig::new(boxes.to_vec(), p, mode),
        )
        .unwrap()
    }

    #[test]
    fn single_leaf_counts() {
        let g = disc(2, &[1, 1], 6, CornerMode::DropCorners);
        assert_eq!(g.n_interior(), 16);
        assert_eq!(g.n_interface(), 0);
        assert_eq!(g.n_dirichlet(), 16);
    }

    #[test]
    fn rejects_low_order_and_bad_domains() {
        assert!(matches!(
            build_discretization(
                DomainBox::unit(2).unwrap(),
                MeshConfig::uniform(2, 1, 3, CornerMode::DropCorners)
            ),
            Err(HpsError::OrderTooSmall { .. })
        ));
        assert!(DomainBox::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(DomainBox::new(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn neighbors_follow_box_adjacency() {
        let g = disc(2, &[2, 1], 6, CornerMode::DropCorners);
        let n0 = leaf_neighbors(&g, 0).unwrap();
        assert_eq!(n0[1].1, Neighbor::Leaf(1));
        assert_eq!(n0[0].1, Neighbor::Dirichlet);
        let g = disc(2, &[3, 3], 5, CornerMode::DropCorners);
        assert!(leaf_neighbors(&g, 4)
            .unwrap()
            .iter()
            .all(|(_, n)| *n != Neighbor::Dirichlet));
        assert!(matches!(
            leaf_neighbors(&g, 9),
            Err(HpsError::LeafOutOfRange { .. })
        ));
    }

    #[test]
    fn shared_face_coordinates_agree_bitwise() {
        let g = build_discretization(
            DomainBox::new(vec![-1.1, 1.0, 1.2], vec![0.1, 2.0, 2.2]).unwrap(),
            MeshConfig::uniform(3, 3, 6, CornerMode::DropCorners),
        )
        .unwrap();
        let t = cheb_points(6);
        for f in g.faces().iter().filter(|f| f.is_interface()) {
            // The face plane coordinate equals the boundary node of the lower
            // leaf's Chebyshev grid computed from its own bounds.
            let lo_leaf = &g.leaves()[f.lower.unwrap()];
            let up_leaf = &g.leaves()[f.upper.unwrap()];
            let a = map_to_interval(t[5], lo_leaf.lo[f.axis], lo_leaf.hi[f.axis]);
            let b = map_to_interval(t[0], up_leaf.lo[f.axis], up_leaf.hi[f.axis]);
            assert_eq!(a.to_bits(), b.to_bits());
            assert_eq!(g.node(f.first_dof)[f.axis].to_bits(), a.to_bits());
        }
    }

    #[test]
    fn sinusoidal_map_rejects_vanishing_psi() {
        assert!(sinusoidal_map(1.0, 6.0).is_err());
        assert!(sinusoidal_map(0.25, 6.0).is_ok());
    }

    #[test]
    fn face_ids_are_unique_and_owner_lookup_inverts() {
        let g = disc(3, &[2, 3, 2], 5, CornerMode::LegendreFaces);
        let mut seen = HashSet::new();
        for l in 0..g.leaf_count() {
            for id in g.leaf_boundary_ids(l) {
                seen.insert(id);
                let (fid, k) = g.boundary_dof_owner(id).unwrap();
                assert_eq!(g.faces()[fid].first_dof + k, id);
            }
        }
        assert_eq!(seen.len(), g.n_interface() + g.n_dirichlet());
    }
}
