//! Dense assembly and solve of the complete collocation system, used to check
//! the condensed pipeline.

use crate::dense::{DenseLu, Mat};
use crate::error::{HpsError, Result};
use crate::geometry::Discretization;
use crate::local_ops::{CoefficientField, LeafTemplate};

pub const DEFAULT_ORACLE_CAP: usize = 20_000;

/// Solves the full system with unknowns at every interior and interface node.
///
/// Rows at interior nodes collocate the PDE; rows at interface nodes sum the
/// outward normal derivatives of the two adjacent leaves; Dirichlet values are
/// moved to the right-hand side. Returns values at every retained node in
/// global id order.
pub fn dense_full_system_oracle(
    disc: &Discretization,
    coeffs: &CoefficientField,
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
    cap: usize,
) -> Result<Vec<f64>> {
    let f_vals: Vec<f64> = (0..disc.n_interior()).map(|i| f(disc.node(i))).collect();
    let g_vals: Vec<f64> = disc.dirichlet_ids().map(|i| g(disc.node(i))).collect();
    dense_full_system_oracle_values(disc, coeffs, &f_vals, &g_vals, cap)
}

/// As [`dense_full_system_oracle`] with the load given at interior nodes and
/// the boundary data at Dirichlet nodes.
pub fn dense_full_system_oracle_values(
    disc: &Discretization,
    coeffs: &CoefficientField,
    f_vals: &[f64],
    g_vals: &[f64],
    cap: usize,
) -> Result<Vec<f64>> {
    let n_int = disc.n_interior();
    let n_unknown = n_int + disc.n_interface();
    if n_unknown > cap {
        return Err(HpsError::OracleCapExceeded { dofs: n_unknown, cap });
    }
    if f_vals.len() != n_int {
        return Err(HpsError::DimensionMismatch {
            expected: n_int,
            got: f_vals.len(),
            context: "interior load length",
        });
    }
    if g_vals.len() != disc.n_dirichlet() {
        return Err(HpsError::DimensionMismatch {
            expected: disc.n_dirichlet(),
            got: g_vals.len(),
            context: "Dirichlet data length",
        });
    }
    let tpl = LeafTemplate::new(disc.p(), &disc.leaf_width(), disc.corner_mode())?;
    let dir0 = disc.dirichlet_ids().start;
    let mut a = Mat::zeros(n_unknown, n_unknown);
    let mut rhs = vec![0.0; n_unknown];
    rhs[..n_int].copy_from_slice(f_vals);

    let add = |a: &mut Mat, rhs: &mut [f64], row: usize, col: usize, v: f64| {
        if col >= dir0 {
            rhs[row] -= v * g_vals[col - dir0];
        } else {
            a[(row, col)] += v;
        }
    };

    for (l, leaf) in disc.leaves().iter().enumerate() {
        let (aii, aib) = tpl.interior_blocks(&leaf.lo, &leaf.hi, coeffs)?;
        let int_ids = disc.interior_ids(l);
        let bnd_ids = disc.leaf_boundary_ids(l);
        for (r, gi) in int_ids.clone().enumerate() {
            for (c, gj) in int_ids.clone().enumerate() {
                a[(gi, gj)] += aii[(r, c)];
            }
            for (c, &gj) in bnd_ids.iter().enumerate() {
                add(&mut a, &mut rhs, gi, gj, aib[(r, c)]);
            }
        }
        for (r, &gi) in bnd_ids.iter().enumerate() {
            if gi >= dir0 {
                continue;
            }
            for (c, gj) in int_ids.clone().enumerate() {
                a[(gi, gj)] += tpl.a_bi()[(r, c)];
            }
            for (c, &gj) in bnd_ids.iter().enumerate() {
                add(&mut a, &mut rhs, gi, gj, tpl.a_bb()[(r, c)]);
            }
        }
    }
    let lu = DenseLu::factor(a)?;
    let mut u = lu.solve(&rhs);
    u.extend_from_slice(g_vals);
    Ok(u)
}
