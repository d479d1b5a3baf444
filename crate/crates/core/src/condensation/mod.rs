//! The solver proper: leaf DtN maps are assembled into a sparse interface
//! system that is factorized once (build stage), then every right-hand side
//! is condensed onto the interface, solved, and expanded back into leaf
//! interiors (solve stage).

pub mod schedule;

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::{dot, norm2};
use crate::error::{HpsError, Result};
use crate::geometry::Discretization;
use crate::local_ops::{CoefficientField, LeafSolver, LeafTemplate};
use crate::sparse_backend::{
    FactorOptions, FactorStats, Factorization, MultifrontalBackend, SparseBackend, SparseMatrix,
};

pub use schedule::{BatchSchedule, CachePolicy, MemoryMeter, Plan, ScheduleStats};

/// Wall-clock seconds spent in each phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub dtn_assembly: f64,
    pub t_assembly: f64,
    pub factorize: f64,
    pub interface_solve: f64,
    pub interior_solve: f64,
    pub load_reduction: f64,
}

/// Dense workspace of one leaf in bytes: the interior factor, `S` and the DtN
/// map, with `n_b` counted as in corner-dropping mode.
pub fn estimate_workspace(p: usize, d: usize) -> usize {
    let n_i = (p.saturating_sub(2)).pow(d as u32);
    let n_b = 2 * d * p.saturating_sub(2).pow(d as u32 - 1);
    workspace_bytes(n_i, n_b)
}

fn workspace_bytes(n_i: usize, n_b: usize) -> usize {
    std::mem::size_of::<f64>() * (n_i * n_i + n_i * n_b + n_b * n_b)
}

/// Where each row/column of `t` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterfaceDof {
    pub face: usize,
    pub face_node: usize,
    pub leaves: [usize; 2],
}

/// The factorized interface system together with everything needed to run
/// the solve stage.
pub struct InterfaceSystem {
    disc: Arc<Discretization>,
    coeffs: CoefficientField,
    template: Arc<LeafTemplate>,
    schedule: BatchSchedule,
    t: SparseMatrix,
    dirichlet_coupling: SparseMatrix,
    factorization: Box<dyn Factorization>,
    cache: Option<Vec<LeafSolver>>,
    build_times: PhaseTimes,
    build_times_reported: AtomicBool,
    factorizations: AtomicUsize,
    build_stats: ScheduleStats,
}

impl std::fmt::Debug for InterfaceSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InterfaceSystem")
            .field("n_interface", &self.t.nrows())
            .field("nnz", &self.t.nnz())
            .field("build_times", &self.build_times)
            .finish()
    }
}

/// Interior-interface load after condensation.
#[derive(Clone, Debug)]
pub struct LoadReduction {
    /// `A_ii⁻¹ f` for every leaf, in global interior order.
    pub v_i: Vec<f64>,
    /// Right-hand side of the interface system.
    pub g_b: Vec<f64>,
    /// Dirichlet values in global Dirichlet order.
    pub g: Vec<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    /// Solution at every retained node, in global id order.
    pub u: Vec<f64>,
    pub wall_times: PhaseTimes,
    /// `‖t u_b − g_b‖₂ / ‖g_b‖₂` with the assembled `t` (absolute when
    /// `g_b = 0`).
    pub residual: f64,
}

/// Build stage with the built-in backend and default factorization options.
pub fn build(
    disc: Arc<Discretization>,
    coeffs: CoefficientField,
    schedule: &BatchSchedule,
) -> Result<InterfaceSystem> {
    build_with(disc, coeffs, schedule, &MultifrontalBackend, &FactorOptions::default())
}

/// Sparsity pattern of `t` and of the Dirichlet coupling: every interface
/// row couples to all DOFs of the faces of its two leaves.
fn skeleton(disc: &Discretization) -> Result<(SparseMatrix, SparseMatrix)> {
    let nf = disc.face_dofs();
    let s0 = disc.interface_ids().start;
    let d0 = disc.dirichlet_ids().start;
    let (mut rp_t, mut ci_t) = (vec![0usize], Vec::new());
    let (mut rp_d, mut ci_d) = (vec![0usize], Vec::new());
    for f in disc.faces().iter().filter(|f| f.is_interface()) {
        let mut coupled: Vec<usize> = Vec::new();
        for l in [f.lower.unwrap(), f.upper.unwrap()] {
            coupled.extend_from_slice(disc.leaf_faces(l));
        }
        coupled.sort_by_key(|&fid| disc.faces()[fid].first_dof);
        coupled.dedup();
        let (mut cols_t, mut cols_d) = (Vec::new(), Vec::new());
        for &fid in &coupled {
            let g = &disc.faces()[fid];
            if g.is_interface() {
                cols_t.extend(g.first_dof - s0..g.first_dof - s0 + nf);
            } else {
                cols_d.extend(g.first_dof - d0..g.first_dof - d0 + nf);
            }
        }
        for _ in 0..nf {
            ci_t.extend_from_slice(&cols_t);
            rp_t.push(ci_t.len());
            ci_d.extend_from_slice(&cols_d);
            rp_d.push(ci_d.len());
        }
    }
    let n = disc.n_interface();
    Ok((
        SparseMatrix::from_pattern(n, n, rp_t, ci_t)?,
        SparseMatrix::from_pattern(n, disc.n_dirichlet(), rp_d, ci_d)?,
    ))
}

/// Adds a leaf's DtN map into `t` and the Dirichlet coupling.
fn scatter_dtn(
    disc: &Discretization,
    leaf: usize,
    dtn: &crate::dense::Mat,
    t: &mut SparseMatrix,
    dc: &mut SparseMatrix,
) {
    let nf = disc.face_dofs();
    let s0 = disc.interface_ids().start;
    let d0 = disc.dirichlet_ids().start;
    let faces = disc.leaf_faces(leaf);
    for (fa, &fr) in faces.iter().enumerate() {
        let rf = &disc.faces()[fr];
        if !rf.is_interface() {
            continue;
        }
        for (fb, &fc) in faces.iter().enumerate() {
            let cf = &disc.faces()[fc];
            let (target, col0) = if cf.is_interface() {
                (&mut *t, cf.first_dof - s0)
            } else {
                (&mut *dc, cf.first_dof - d0)
            };
            for a in 0..nf {
                let row = rf.first_dof - s0 + a;
                let pos = target.position(row, col0).expect("skeleton covers leaf couplings");
                let src = &dtn.row(fa * nf + a)[fb * nf..(fb + 1) * nf];
                for (v, x) in target.values_mut()[pos..pos + nf].iter_mut().zip(src) {
                    *v += x;
                }
            }
        }
    }
}

/// Build stage with an explicit backend.
pub fn build_with(
    disc: Arc<Discretization>,
    coeffs: CoefficientField,
    schedule: &BatchSchedule,
    backend: &dyn SparseBackend,
    options: &FactorOptions,
) -> Result<InterfaceSystem> {
    if coeffs.dim() != disc.dim() {
        return Err(HpsError::DimensionMismatch {
            expected: disc.dim(),
            got: coeffs.dim(),
            context: "coefficient field dimension",
        });
    }
    if coeffs.has_cross_terms() && disc.corner_mode() == crate::geometry::CornerMode::DropCorners {
        return Err(HpsError::CrossTermsRequireLegendre);
    }
    let template = LeafTemplate::new(disc.p(), &disc.leaf_width(), disc.corner_mode())?;
    let (n_i, n_b) = (template.n_interior(), template.n_boundary());
    let ws = workspace_bytes(n_i, n_b);
    let tb = std::mem::size_of::<f64>() * n_b * n_b;
    let plan = schedule.plan(ws, tb)?;
    let keep = schedule.cache == CachePolicy::Keep;

    let (mut t, mut dc) = skeleton(&disc)?;
    let mut times = PhaseTimes::default();
    let mut cache: Vec<Option<LeafSolver>> = if keep { vec![None; disc.leaf_count()] } else { Vec::new() };

    let start = Instant::now();
    let mut scatter_secs = 0.0;
    let stats = schedule::run_batched(
        disc.leaf_count(),
        plan,
        schedule.workers,
        ws,
        tb,
        |l| {
            let leaf = &disc.leaves()[l];
            let fac = template.factors(l, &leaf.lo, &leaf.hi, &coeffs)?;
            let dtn = fac.dtn.clone();
            Ok((dtn, keep.then(|| fac.into_solver())))
        },
        |items| {
            let s = Instant::now();
            for (l, (dtn, solver)) in items {
                scatter_dtn(&disc, l, &dtn, &mut t, &mut dc);
                if let Some(solver) = solver {
                    cache[l] = Some(solver);
                }
            }
            scatter_secs += s.elapsed().as_secs_f64();
            Ok(())
        },
    )?;
    let total = start.elapsed().as_secs_f64();
    times.t_assembly = scatter_secs;
    times.dtn_assembly = total - scatter_secs;

    let s = Instant::now();
    let factorization = if t.nrows() == 0 {
        Box::new(EmptyFactorization::default()) as Box<dyn Factorization>
    } else {
        backend.analyze_and_factor(&t, options)?
    };
    times.factorize = s.elapsed().as_secs_f64();

    Ok(InterfaceSystem {
        disc,
        coeffs,
        template,
        schedule: schedule.clone(),
        t,
        dirichlet_coupling: dc,
        factorization,
        cache: keep.then(|| cache.into_iter().map(|c| c.expect("every leaf cached")).collect()),
        build_times: times,
        build_times_reported: AtomicBool::new(false),
        factorizations: AtomicUsize::new(1),
        build_stats: stats,
    })
}

#[derive(Debug, Default)]
struct EmptyFactorization {
    stats: FactorStats,
}

impl Factorization for EmptyFactorization {
    fn n(&self) -> usize {
        0
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if !b.is_empty() {
            return Err(HpsError::DimensionMismatch {
                expected: 0,
                got: b.len(),
                context: "right-hand side length",
            });
        }
        Ok(Vec::new())
    }

    fn solve_multi(&self, b: &crate::dense::Mat) -> Result<crate::dense::Mat> {
        if b.rows() != 0 {
            return Err(HpsError::DimensionMismatch {
                expected: 0,
                got: b.rows(),
                context: "right-hand side rows",
            });
        }
        Ok(b.clone())
    }

    fn stats(&self) -> &FactorStats {
        &self.stats
    }
}

impl InterfaceSystem {
    pub fn disc(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn coeffs(&self) -> &CoefficientField {
        &self.coeffs
    }

    pub fn template(&self) -> &Arc<LeafTemplate> {
        &self.template
    }

    /// The assembled interface matrix.
    pub fn t(&self) -> &SparseMatrix {
        &self.t
    }

    /// Interface rows against Dirichlet DOFs (columns in Dirichlet order).
    pub fn dirichlet_coupling(&self) -> &SparseMatrix {
        &self.dirichlet_coupling
    }

    pub fn factorization(&self) -> &dyn Factorization {
        self.factorization.as_ref()
    }

    /// Number of factorizations of `t` performed over the system's lifetime.
    pub fn factorization_count(&self) -> usize {
        self.factorizations.load(AtomicOrdering::SeqCst)
    }

    pub fn build_times(&self) -> PhaseTimes {
        self.build_times
    }

    pub fn build_stats(&self) -> ScheduleStats {
        self.build_stats
    }

    pub fn schedule(&self) -> &BatchSchedule {
        &self.schedule
    }

    /// Origin of interface DOF `k` (0-based within the interface block).
    pub fn dof_map(&self, k: usize) -> Option<InterfaceDof> {
        let id = self.disc.interface_ids().start + k;
        if !self.disc.interface_ids().contains(&id) {
            return None;
        }
        let (face, face_node) = self.disc.boundary_dof_owner(id)?;
        let f = &self.disc.faces()[face];
        Some(InterfaceDof {
            face,
            face_node,
            leaves: [f.lower?, f.upper?],
        })
    }

    fn leaf_solver(&self, l: usize) -> Result<std::borrow::Cow<'_, LeafSolver>> {
        match &self.cache {
            Some(c) => Ok(std::borrow::Cow::Borrowed(&c[l])),
            None => {
                let leaf = &self.disc.leaves()[l];
                Ok(std::borrow::Cow::Owned(self.template.solver(l, &leaf.lo, &leaf.hi, &self.coeffs)?))
            }
        }
    }

    fn leaf_plan(&self) -> Result<(Plan, usize, usize)> {
        let (n_i, n_b) = (self.template.n_interior(), self.template.n_boundary());
        let ws = std::mem::size_of::<f64>() * (n_i * n_i + n_i * n_b);
        let rb = std::mem::size_of::<f64>() * (n_i + n_b);
        Ok((self.schedule.plan(ws, rb)?, ws, rb))
    }

    /// Condenses a body load given at interior nodes and Dirichlet values.
    pub fn reduce_load_values(&self, f_int: &[f64], g: &[f64]) -> Result<LoadReduction> {
        let disc = &self.disc;
        if f_int.len() != disc.n_interior() {
            return Err(HpsError::DimensionMismatch {
                expected: disc.n_interior(),
                got: f_int.len(),
                context: "interior load length",
            });
        }
        if g.len() != disc.n_dirichlet() {
            return Err(HpsError::DimensionMismatch {
                expected: disc.n_dirichlet(),
                got: g.len(),
                context: "Dirichlet data length",
            });
        }
        let start = Instant::now();
        let n_i = disc.interior_per_leaf();
        let s0 = disc.interface_ids().start;
        let mut v_i = vec![0.0; disc.n_interior()];
        let mut g_b = vec![0.0; disc.n_interface()];
        let (plan, ws, rb) = self.leaf_plan()?;
        let a_bi = self.template.a_bi();
        schedule::run_batched(
            disc.leaf_count(),
            plan,
            self.schedule.workers,
            ws,
            rb,
            |l| {
                let f = &f_int[l * n_i..(l + 1) * n_i];
                if f.iter().all(|&x| x == 0.0) {
                    return Ok((vec![0.0; n_i], vec![0.0; a_bi.rows()]));
                }
                let v = self.leaf_solver(l)?.a_ii().solve(f);
                let flux = a_bi.matvec(&v);
                Ok((v, flux))
            },
            |items| {
                for (l, (v, flux)) in items {
                    v_i[l * n_i..(l + 1) * n_i].copy_from_slice(&v);
                    for (id, c) in disc.leaf_boundary_ids(l).into_iter().zip(flux) {
                        if id >= s0 && id < s0 + g_b.len() {
                            g_b[id - s0] -= c;
                        }
                    }
                }
                Ok(())
            },
        )?;
        let dg = self.dirichlet_coupling.matvec(g);
        for (x, y) in g_b.iter_mut().zip(dg) {
            *x -= y;
        }
        Ok(LoadReduction {
            v_i,
            g_b,
            g: g.to_vec(),
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// Condenses the body load `f` and Dirichlet data `g`.
    pub fn reduce_load(&self, f: &dyn Fn(&[f64]) -> f64, g: &dyn Fn(&[f64]) -> f64) -> Result<LoadReduction> {
        let disc = &self.disc;
        let f_int: Vec<f64> = (0..disc.n_interior()).map(|i| f(disc.node(i))).collect();
        let g_vals: Vec<f64> = disc.dirichlet_ids().map(|i| g(disc.node(i))).collect();
        self.reduce_load_values(&f_int, &g_vals)
    }

    /// Solves the interface system and reconstructs all leaf interiors.
    pub fn solve(&self, load: &LoadReduction) -> Result<SolveReport> {
        let disc = &self.disc;
        if load.g_b.len() != disc.n_interface() || load.v_i.len() != disc.n_interior() {
            return Err(HpsError::DimensionMismatch {
                expected: disc.n_interface(),
                got: load.g_b.len(),
                context: "condensed load does not match the interface system",
            });
        }
        if load.g.len() != disc.n_dirichlet() {
            return Err(HpsError::DimensionMismatch {
                expected: disc.n_dirichlet(),
                got: load.g.len(),
                context: "Dirichlet data length",
            });
        }
        let mut times = if self.build_times_reported.swap(true, AtomicOrdering::SeqCst) {
            PhaseTimes::default()
        } else {
            self.build_times
        };
        times.load_reduction = load.seconds;

        let s = Instant::now();
        let u_b = self.factorization.solve(&load.g_b)?;
        times.interface_solve = s.elapsed().as_secs_f64();
        let tu = self.t.matvec(&u_b);
        let diff: f64 = tu.iter().zip(&load.g_b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let gn = norm2(&load.g_b);
        let residual = if gn > 0.0 { diff / gn } else { diff };

        let s = Instant::now();
        let mut u = vec![0.0; disc.n_nodes()];
        u[disc.interface_ids()].copy_from_slice(&u_b);
        u[disc.dirichlet_ids()].copy_from_slice(&load.g);
        let n_i = disc.interior_per_leaf();
        let (plan, ws, rb) = self.leaf_plan()?;
        let u_ref = &u;
        let mut interiors: Vec<(usize, Vec<f64>)> = Vec::with_capacity(disc.leaf_count());
        schedule::run_batched(
            disc.leaf_count(),
            plan,
            self.schedule.workers,
            ws,
            rb,
            |l| {
                let solver = self.leaf_solver(l)?;
                let ub: Vec<f64> = disc.leaf_boundary_ids(l).iter().map(|&id| u_ref[id]).collect();
                let w: Vec<f64> = (0..n_i).map(|r| dot(solver.a_ib().row(r), &ub)).collect();
                let corr = solver.a_ii().solve(&w);
                let v = &load.v_i[l * n_i..(l + 1) * n_i];
                Ok(v.iter().zip(corr).map(|(a, b)| a - b).collect::<Vec<f64>>())
            },
            |items| {
                interiors.extend(items);
                Ok(())
            },
        )?;
        for (l, vals) in interiors {
            u[l * n_i..(l + 1) * n_i].copy_from_slice(&vals);
        }
        times.interior_solve = s.elapsed().as_secs_f64();
        Ok(SolveReport {
            u,
            wall_times: times,
            residual,
        })
    }

    /// Reduce and solve in one call.
    pub fn solve_problem(&self, f: &dyn Fn(&[f64]) -> f64, g: &dyn Fn(&[f64]) -> f64) -> Result<SolveReport> {
        let load = self.reduce_load(f, g)?;
        self.solve(&load)
    }

    /// Applies the collocated operator at every interior node to a full
    /// node vector `u`.
    pub fn apply_interior_rows(&self, u: &[f64]) -> Result<Vec<f64>> {
        let disc = &self.disc;
        if u.len() != disc.n_nodes() {
            return Err(HpsError::DimensionMismatch {
                expected: disc.n_nodes(),
                got: u.len(),
                context: "node vector length",
            });
        }
        let n_i = disc.interior_per_leaf();
        let mut out = vec![0.0; disc.n_interior()];
        let (plan, ws, rb) = self.leaf_plan()?;
        schedule::run_batched(
            disc.leaf_count(),
            plan,
            self.schedule.workers,
            ws,
            rb,
            |l| {
                let ub: Vec<f64> = disc.leaf_boundary_ids(l).iter().map(|&id| u[id]).collect();
                let ui = &u[l * n_i..(l + 1) * n_i];
                if let Some(c) = &self.cache {
                    return Ok(c[l].apply(ui, &ub));
                }
                let leaf = &disc.leaves()[l];
                let (aii, aib) = self.template.interior_blocks(&leaf.lo, &leaf.hi, &self.coeffs)?;
                let mut y = aii.matvec(ui);
                for (yi, z) in y.iter_mut().zip(aib.matvec(&ub)) {
                    *yi += z;
                }
                Ok(y)
            },
            |items| {
                for (l, y) in items {
                    out[l * n_i..(l + 1) * n_i].copy_from_slice(&y);
                }
                Ok(())
            },
        )?;
        Ok(out)
    }
}

/// Free-function form of [`InterfaceSystem::reduce_load`].
pub fn reduce_load(
    sys: &InterfaceSystem,
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
) -> Result<LoadReduction> {
    sys.reduce_load(f, g)
}

/// Free-function form of [`InterfaceSystem::solve`].
pub fn solve(sys: &InterfaceSystem, load: &LoadReduction) -> Result<SolveReport> {
    sys.solve(load)
}
