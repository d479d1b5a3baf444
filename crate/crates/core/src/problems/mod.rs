//! Problem registry: operators, loads, boundary data and manufactured
//! solutions, plus error metrics.

pub mod parabolic;

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{HpsError, Result};
use crate::geometry::{sinusoidal_map, CornerMode, Discretization, DomainBox};
use crate::local_ops::spectral::{bary_weights, cheb_points, map_to_interval};
use crate::local_ops::{CoefficientField, PointCoefficients};

pub use parabolic::{
    convection_diffusion, crank_nicolson_run, heat_manufactured, mass_center, node_quadrature_weights,
    ParabolicProblem, TimeStepConfig, Trajectory,
};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An elliptic boundary value problem `L u = f` in the domain, `u = g` on
/// its boundary.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: DomainBox,
    pub coeffs: CoefficientField,
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub exact: Option<ScalarFn>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("coeffs", &self.coeffs)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Corner handling compatible with the operator.
    pub fn corner_mode(&self) -> CornerMode {
        if self.coeffs.has_cross_terms() {
            CornerMode::LegendreFaces
        } else {
            CornerMode::DropCorners
        }
    }

    /// Exact solution at every node of `disc`, if known.
    pub fn exact_at_nodes(&self, disc: &Discretization) -> Option<Vec<f64>> {
        let e = self.exact.as_ref()?;
        Some((0..disc.n_nodes()).map(|i| e(disc.node(i))).collect())
    }
}

/// The domain used by the Green's function experiments.
pub fn green_domain(d: usize) -> DomainBox {
    let (lo, hi) = ([-1.1, 1.0, 1.2], [0.1, 2.0, 2.2]);
    DomainBox::new(lo[..d].to_vec(), hi[..d].to_vec()).expect("valid box")
}

/// The domain used by the gravity Helmholtz experiment.
pub fn gravity_domain(d: usize) -> DomainBox {
    let (lo, hi) = ([1.1, -1.0, -1.2], [2.1, 0.0, -0.2]);
    DomainBox::new(lo[..d].to_vec(), hi[..d].to_vec()).expect("valid box")
}

fn check_origin_excluded(domain: &DomainBox) -> Result<()> {
    if domain.contains(&vec![0.0; domain.dim()]) {
        return Err(HpsError::InvalidProblem(
            "the Green's function singularity at the origin lies in the closed domain".into(),
        ));
    }
    Ok(())
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Laplace's equation with the free-space Green's function as solution:
/// `1/(4π|x|)` in 3D and `−ln|x|/(2π)` in 2D.
pub fn poisson_green(domain: DomainBox) -> Result<ProblemSpec> {
    check_origin_excluded(&domain)?;
    let d = domain.dim();
    let exact: ScalarFn = if d == 3 {
        Arc::new(|x: &[f64]| 1.0 / (4.0 * PI * radius(x)))
    } else {
        Arc::new(|x: &[f64]| -radius(x).ln() / (2.0 * PI))
    };
    Ok(ProblemSpec {
        name: "poisson_green".into(),
        domain,
        coeffs: CoefficientField::laplace(d),
        f: Arc::new(|_| 0.0),
        g: exact.clone(),
        exact: Some(exact),
    })
}

/// `Δu + κ²u = 0`. In 3D the solution is `cos(κ|x|)/(4π|x|)`; in 2D a plane
/// wave travelling along (0.6, 0.8).
pub fn helmholtz_green(domain: DomainBox, kappa: f64) -> Result<ProblemSpec> {
    check_origin_excluded(&domain)?;
    let d = domain.dim();
    let exact: ScalarFn = if d == 3 {
        Arc::new(move |x: &[f64]| {
            let r = radius(x);
            (kappa * r).cos() / (4.0 * PI * r)
        })
    } else {
        Arc::new(move |x: &[f64]| (kappa * (0.6 * x[0] + 0.8 * x[1])).cos())
    };
    Ok(ProblemSpec {
        name: "helmholtz_green".into(),
        domain,
        coeffs: CoefficientField::helmholtz(d, kappa),
        f: Arc::new(|_| 0.0),
        g: exact.clone(),
        exact: Some(exact),
    })
}

/// `Δu + κ²(1 − x_d)u = −1` with zero boundary data; no closed-form solution.
pub fn gravity_helmholtz(domain: DomainBox, kappa: f64) -> Result<ProblemSpec> {
    let d = domain.dim();
    let k2 = kappa * kappa;
    Ok(ProblemSpec {
        name: "gravity_helmholtz".into(),
        domain,
        coeffs: CoefficientField::new(d, false, move |x| {
            PointCoefficients::isotropic(d, 1.0, -k2 * (1.0 - x[d - 1]))
        }),
        f: Arc::new(|_| 1.0),
        g: Arc::new(|_| 0.0),
        exact: None,
    })
}

/// Reference box of the curved-domain experiment.
pub fn curved_reference_box() -> DomainBox {
    DomainBox::new(vec![1.1, -1.0, -1.2], vec![2.1, 0.0, -0.2]).expect("valid box")
}

/// Helmholtz on the sinusoidal domain `{(x₁, x₂/ψ(x₁), x₃)}`,
/// `ψ(z) = 1 − ¼ sin(6z)`, posed on the reference box; the Green's function
/// composed with the map is the exact solution.
pub fn curved_helmholtz(kappa: f64) -> Result<ProblemSpec> {
    curved_helmholtz_with(kappa, 0.25, 6.0)
}

pub fn curved_helmholtz_with(kappa: f64, amplitude: f64, frequency: f64) -> Result<ProblemSpec> {
    let map = sinusoidal_map(amplitude, frequency)?;
    let fmap = map.clone();
    let exact: ScalarFn = Arc::new(move |x: &[f64]| {
        let y = fmap.forward(x);
        let r = radius(&y);
        (kappa * r).cos() / (4.0 * PI * r)
    });
    Ok(ProblemSpec {
        name: "curved_helmholtz".into(),
        domain: curved_reference_box(),
        coeffs: CoefficientField::helmholtz(3, kappa).mapped(map),
        f: Arc::new(|_| 0.0),
        g: exact.clone(),
        exact: Some(exact),
    })
}

/// Wavenumber giving about ten nodes per wavelength for leaves of width `h`
/// with `p` nodes per side: `(2π/κ)/(h/(p − 1)) = 10`.
pub fn kappa_for_ppw(p: usize, h: f64, ppw: f64) -> f64 {
    2.0 * PI * (p as f64 - 1.0) / (ppw * h)
}

/// Parameters accepted by [`problem_by_name`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemParams {
    pub kappa: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub dim: usize,
    pub domain: Option<DomainBox>,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            kappa: 16.0,
            amplitude: 0.25,
            frequency: 6.0,
            dim: 3,
            domain: None,
        }
    }
}

/// A registry entry.
#[derive(Clone, Debug)]
pub enum Problem {
    Elliptic(ProblemSpec),
    Parabolic(ParabolicProblem),
}

pub const PROBLEM_NAMES: [&str; 6] = [
    "poisson_green",
    "helmholtz_green",
    "gravity_helmholtz",
    "curved_helmholtz",
    "heat_manufactured",
    "convection_diffusion",
];

pub fn problem_by_name(name: &str, params: &ProblemParams) -> Result<Problem> {
    let dim = params.domain.as_ref().map_or(params.dim, DomainBox::dim);
    let dom = |default: fn(usize) -> DomainBox| params.domain.clone().unwrap_or_else(|| default(dim));
    match name {
        "poisson_green" => poisson_green(dom(green_domain)).map(Problem::Elliptic),
        "helmholtz_green" => helmholtz_green(dom(green_domain), params.kappa).map(Problem::Elliptic),
        "gravity_helmholtz" => gravity_helmholtz(dom(gravity_domain), params.kappa).map(Problem::Elliptic),
        "curved_helmholtz" => {
            if dim != 3 {
                return Err(HpsError::InvalidProblem("curved_helmholtz is three-dimensional".into()));
            }
            curved_helmholtz_with(params.kappa, params.amplitude, params.frequency).map(Problem::Elliptic)
        }
        "heat_manufactured" => Ok(Problem::Parabolic(heat_manufactured(dim))),
        "convection_diffusion" => Ok(Problem::Parabolic(convection_diffusion())),
        _ => Err(HpsError::InvalidProblem(format!(
            "unknown problem '{name}' (known: {})",
            PROBLEM_NAMES.join(", ")
        ))),
    }
}

/// `‖u − exact‖₂ / ‖exact‖₂`.
pub fn relative_l2_error(u: &[f64], exact: &[f64]) -> Result<f64> {
    if u.len() != exact.len() {
        return Err(HpsError::DimensionMismatch {
            expected: exact.len(),
            got: u.len(),
            context: "solution and reference lengths",
        });
    }
    let num: f64 = u.iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = exact.iter().map(|b| b * b).sum();
    if den == 0.0 {
        return Err(HpsError::ZeroNormReference);
    }
    Ok((num / den).sqrt())
}

/// Evaluates a computed solution at an arbitrary point by tensor-product
/// interpolation through the interior nodes of the leaf containing it.
pub fn interpolate_interior(disc: &Discretization, u: &[f64], x: &[f64]) -> Result<f64> {
    let d = disc.dim();
    if x.len() != d || !disc.domain().contains(x) {
        return Err(HpsError::InvalidProblem(format!("point {x:?} outside the domain")));
    }
    let boxes = &disc.mesh().boxes_per_dim;
    let (lo, hi) = (disc.domain().lo(), disc.domain().hi());
    let mut leaf = 0;
    for k in (0..d).rev() {
        let s = (x[k] - lo[k]) / (hi[k] - lo[k]) * boxes[k] as f64;
        let i = (s.floor().max(0.0) as usize).min(boxes[k] - 1);
        leaf = leaf * boxes[k] + i;
    }
    let lf = &disc.leaves()[leaf];
    let p = disc.p();
    let t = cheb_points(p);
    let m = p - 2;
    let mut weights_per_axis = Vec::with_capacity(d);
    for k in 0..d {
        let pts: Vec<f64> = t[1..p - 1].iter().map(|&s| map_to_interval(s, lf.lo[k], lf.hi[k])).collect();
        let bw = bary_weights(&pts);
        let w: Vec<f64> = if let Some(j) = pts.iter().position(|&q| q == x[k]) {
            (0..m).map(|i| if i == j { 1.0 } else { 0.0 }).collect()
        } else {
            let raw: Vec<f64> = pts.iter().zip(&bw).map(|(&q, &b)| b / (x[k] - q)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|r| r / s).collect()
        };
        weights_per_axis.push(w);
    }
    let base = disc.interior_ids(leaf).start;
    let mut acc = 0.0;
    for q in 0..m.pow(d as u32) {
        let mut w = 1.0;
        let mut r = q;
        for wk in &weights_per_axis {
            w *= wk[r % m];
            r /= m;
        }
        acc += w * u[base + q];
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_fd(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..x.len() {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[k] += h;
            b[k] -= h;
            s += f(&a) - 2.0 * f(x) + f(&b);
        }
        s / (h * h)
    }

    #[test]
    fn poisson_exact_value_at_sample_point() {
        let p = poisson_green(green_domain(3)).unwrap();
        let x = [0.5, 1.5, 1.7];
        let r = (0.25f64 + 2.25 + 2.89).sqrt();
        assert!((p.exact.as_ref().unwrap()(&x) - 1.0 / (4.0 * PI * r)).abs() < 1e-16);
        assert!((laplacian_fd(p.exact.as_ref().unwrap().as_ref(), &x, 1e-3)).abs() < 1e-6);
    }

    #[test]
    fn origin_in_domain_is_rejected() {
        let d = DomainBox::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        assert!(poisson_green(d.clone()).is_err());
        assert!(helmholtz_green(d, 1.0).is_err());
    }

    #[test]
    fn relative_error_homogeneity() {
        let e = vec![1.0, -2.0, 3.0];
        let u: Vec<f64> = e.iter().map(|v| 1.01 * v).collect();
        assert!((relative_l2_error(&u, &e).unwrap() - 0.01).abs() < 1e-14);
        assert_eq!(relative_l2_error(&e, &e).unwrap(), 0.0);
        assert_eq!(relative_l2_error(&e, &[0.0; 3]), Err(HpsError::ZeroNormReference));
    }

    #[test]
    fn unknown_problem_is_an_error() {
        assert!(matches!(
            problem_by_name("nope", &ProblemParams::default()),
            Err(HpsError::InvalidProblem(_))
        ));
    }

    #[test]
    fn ppw_formula() {
        let k = kappa_for_ppw(10, 0.5, 10.0);
        let wavelength = 2.0 * PI / k;
        assert!((wavelength / (0.5 / 9.0) - 10.0).abs() < 1e-12);
    }
}
