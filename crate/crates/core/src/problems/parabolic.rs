//! Crank–Nicolson time stepping for `u_t = ν Δu − ∇·(b u)` with homogeneous
//! Dirichlet data, and trajectory diagnostics.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::condensation::{build, BatchSchedule, PhaseTimes};
use crate::error::{HpsError, Result};
use crate::geometry::{CornerMode, Discretization, DomainBox};
use crate::local_ops::spectral::clenshaw_curtis_weights;
use crate::local_ops::{CoefficientField, PointCoefficients};

use super::ScalarFn;

pub type VectorFn = Arc<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// `u_t = ν Δu − ∇·(b u)` in a box, `u = 0` on its boundary.
#[derive(Clone)]
pub struct ParabolicProblem {
    pub name: String,
    pub domain: DomainBox,
    pub nu: f64,
    /// Velocity field; `None` means pure diffusion.
    pub velocity: Option<VectorFn>,
    /// Analytic `∇·b`.
    pub divergence: ScalarFn,
    pub u0: ScalarFn,
    pub exact: Option<SpaceTimeFn>,
}

impl std::fmt::Debug for ParabolicProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParabolicProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("nu", &self.nu)
            .finish()
    }
}

impl ParabolicProblem {
    /// Coefficients of `I − (dt/2) A` in the collocation sign convention.
    pub fn implicit_coefficients(&self, dt: f64) -> CoefficientField {
        let d = self.domain.dim();
        let h = 0.5 * dt;
        let nu = self.nu;
        let vel = self.velocity.clone();
        let div = self.divergence.clone();
        CoefficientField::new(d, false, move |x| {
            let mut pc = PointCoefficients::isotropic(d, h * nu, 1.0 + h * div(x));
            if let Some(v) = &vel {
                let b = v(x);
                for k in 0..d {
                    pc.b[k] = -h * b[k];
                }
            }
            pc
        })
    }
}

/// Heat equation on the unit box with solution `e^{−dπ²t} Π sin(πx_k)`.
pub fn heat_manufactured(d: usize) -> ParabolicProblem {
    let rate = d as f64 * PI * PI;
    let shape = move |x: &[f64]| x.iter().map(|v| (PI * v).sin()).product::<f64>();
    ParabolicProblem {
        name: "heat_manufactured".into(),
        domain: DomainBox::unit(d).expect("valid box"),
        nu: 1.0,
        velocity: None,
        divergence: Arc::new(|_| 0.0),
        u0: Arc::new(shape),
        exact: Some(Arc::new(move |x, t| (-rate * t).exp() * shape(x))),
    }
}

/// Contaminant transport in `[−0.5, 0.5]³` with `ν = 10⁻⁴`, swirl velocity
/// `b = (−cos x₁ sin x₂ x₃, sin x₁ cos x₂ x₃, 0)` and a Gaussian initial bump
/// centred at `(0, −0.3, 0)`.
pub fn convection_diffusion() -> ParabolicProblem {
    ParabolicProblem {
        name: "convection_diffusion".into(),
        domain: DomainBox::new(vec![-0.5; 3], vec![0.5; 3]).expect("valid box"),
        nu: 1e-4,
        velocity: Some(Arc::new(|x| {
            [-x[0].cos() * x[1].sin() * x[2], x[0].sin() * x[1].cos() * x[2], 0.0]
        })),
        // ∂₁b₁ + ∂₂b₂ = sin x₁ sin x₂ x₃ − sin x₁ sin x₂ x₃.
        divergence: Arc::new(|_| 0.0),
        u0: Arc::new(|x| (-(x[0] * x[0] + (x[1] + 0.3) * (x[1] + 0.3) + x[2] * x[2]) / 0.002).exp()),
        exact: None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeStepConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `snapshot_stride`-th state (0 keeps only the final one).
    pub snapshot_stride: usize,
}

impl TimeStepConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        let c = Self {
            dt,
            t_end,
            snapshot_stride: 0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(HpsError::InvalidTimeStep(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(HpsError::InvalidTimeStep(format!(
                "t_end = {} is shorter than dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    /// Number of steps, `t_end/dt` rounded to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `(time, node values)` for the initial state, every stride-th step and
    /// the final state.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    /// Factorizations of the interface matrix during the run.
    pub factorizations: usize,
    /// Phase timings of every step; only the first carries build costs.
    pub step_times: Vec<PhaseTimes>,
}

/// Advances `u0` with Crank–Nicolson. The interface system for
/// `I − (dt/2)A` is built and factorized once; each step applies
/// `I + (dt/2)A = 2I − (I − (dt/2)A)` with the same collocation rows to form
/// the load and runs the solve stage.
pub fn crank_nicolson_run(
    disc: Arc<Discretization>,
    problem: &ParabolicProblem,
    cfg: &TimeStepConfig,
    schedule: &BatchSchedule,
) -> Result<Trajectory> {
    cfg.validate()?;
    if disc.domain() != &problem.domain {
        return Err(HpsError::InvalidProblem("discretization and problem domains differ".into()));
    }
    let sys = build(disc.clone(), problem.implicit_coefficients(cfg.dt), schedule)?;
    let n = disc.n_nodes();
    let mut u: Vec<f64> = (0..n).map(|i| (problem.u0)(disc.node(i))).collect();
    for id in disc.dirichlet_ids() {
        u[id] = 0.0;
    }
    let zeros = vec![0.0; disc.n_dirichlet()];
    let steps = cfg.steps();
    let mut snapshots = vec![(0.0, u.clone())];
    let mut step_times = Vec::with_capacity(steps);
    for k in 1..=steps {
        let mu = sys.apply_interior_rows(&u)?;
        let rhs: Vec<f64> = mu.iter().zip(&u[..disc.n_interior()]).map(|(m, v)| 2.0 * v - m).collect();
        let load = sys.reduce_load_values(&rhs, &zeros)?;
        let report = sys.solve(&load)?;
        u = report.u;
        step_times.push(report.wall_times);
        if cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0 && k != steps {
            snapshots.push((k as f64 * cfg.dt, u.clone()));
        }
    }
    let final_time = steps as f64 * cfg.dt;
    snapshots.push((final_time, u.clone()));
    Ok(Trajectory {
        snapshots,
        final_time,
        final_state: u,
        factorizations: sys.factorization_count(),
        step_times,
    })
}

/// Quadrature weight of every retained node from tensor Clenshaw–Curtis rules
/// on each leaf; a shared face node collects the weights of both leaves.
/// Only defined for corner-dropping discretizations.
pub fn node_quadrature_weights(disc: &Discretization) -> Result<Vec<f64>> {
    if disc.corner_mode() != CornerMode::DropCorners {
        return Err(HpsError::InvalidProblem(
            "node quadrature weights need face nodes on the Chebyshev grid".into(),
        ));
    }
    let (p, d) = (disc.p(), disc.dim());
    let cc = clenshaw_curtis_weights(p);
    let widths = disc.leaf_width();
    let scale: Vec<f64> = widths.iter().map(|h| 0.5 * h).collect();
    let mut w = vec![0.0; disc.n_nodes()];
    let m = p - 2;
    for l in 0..disc.leaf_count() {
        for (q, id) in disc.interior_ids(l).enumerate() {
            let mut r = q;
            let mut wt = 1.0;
            for s in &scale {
                wt *= cc[1 + r % m] * s;
                r /= m;
            }
            w[id] = wt;
        }
        let faces = disc.leaf_faces(l);
        for (j, &fid) in faces.iter().enumerate() {
            let axis = j / 2;
            let first = disc.faces()[fid].first_dof;
            let tang: Vec<usize> = (0..d).filter(|&k| k != axis).collect();
            for q in 0..disc.face_dofs() {
                let mut r = q;
                let mut wt = cc[0] * scale[axis];
                for &k in &tang {
                    wt *= cc[1 + r % m] * scale[k];
                    r /= m;
                }
                w[first + q] += wt;
            }
        }
    }
    Ok(w)
}

/// Weighted centre `(x₁, x₂)` of `u` over the nodes selected by `region`.
pub fn mass_center(
    disc: &Discretization,
    u: &[f64],
    weights: &[f64],
    region: &dyn Fn(&[f64]) -> bool,
) -> (f64, f64) {
    let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
    for i in 0..disc.n_nodes() {
        let x = disc.node(i);
        if !region(x) {
            continue;
        }
        let q = weights[i] * u[i];
        m += q;
        mx += q * x[0];
        my += q * x[1];
    }
    (mx / m, my / m)
}
