use std::f64::consts::PI;
use std::sync::Arc;

use hps_core::problems::{
    convection_diffusion, crank_nicolson_run, curved_helmholtz, curved_helmholtz_with, curved_reference_box,
    gravity_domain, gravity_helmholtz, green_domain, heat_manufactured, helmholtz_green, interpolate_interior,
    kappa_for_ppw, mass_center, node_quadrature_weights, poisson_green, problem_by_name, relative_l2_error,
    ParabolicProblem, Problem, ProblemParams, ProblemSpec, TimeStepConfig, PROBLEM_NAMES,
};
use hps_core::{build_discretization, BatchSchedule, CachePolicy, CornerMode, DomainBox, HpsError, MeshConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fourth-order central difference weights for the first and second
/// derivative on the stencil −2..2.
const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

/// `L u − f` at `x` with all derivatives of `u` taken by finite differences,
/// relative to the sum of the magnitudes of the individual terms.
fn fd_residual(spec: &ProblemSpec, x: &[f64]) -> f64 {
    let d = spec.domain.dim();
    let u = spec.exact.as_ref().unwrap();
    let h = 1e-3;
    let at = |shift: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(k, s) in shift {
            y[k] += s;
        }
        u(&y)
    };
    let pc = spec.coeffs.eval(x);
    let mut terms = vec![pc.c * u(x), -(spec.f)(x)];
    for k in 0..d {
        let dk: f64 = (0..5).map(|i| D1[i] * at(&[(k, (i as f64 - 2.0) * h)])).sum::<f64>() / h;
        terms.push(-pc.b[k] * dk);
        for l in 0..d {
            if pc.a[k][l] == 0.0 {
                continue;
            }
            let dkl = if k == l {
                (0..5).map(|i| D2[i] * at(&[(k, (i as f64 - 2.0) * h)])).sum::<f64>() / (h * h)
            } else {
                let mut s = 0.0;
                for i in 0..5 {
                    for j in 0..5 {
                        s += D1[i] * D1[j] * at(&[(k, (i as f64 - 2.0) * h), (l, (j as f64 - 2.0) * h)]);
                    }
                }
                s / (h * h)
            };
            terms.push(-pc.a[k][l] * dkl);
        }
    }
    let sum: f64 = terms.iter().sum();
    let mag: f64 = terms.iter().map(|t| t.abs()).sum();
    sum.abs() / mag
}

fn random_points(domain: &DomainBox, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Keep the stencil inside the domain.
    let m = 0.01;
    (0..n)
        .map(|_| {
            (0..domain.dim())
                .map(|k| rng.gen_range(domain.lo()[k] + m..domain.hi()[k] - m))
                .collect()
        })
        .collect()
}

#[test]
fn manufactured_solutions_satisfy_their_equations() {
    let specs = [
        poisson_green(green_domain(3)).unwrap(),
        poisson_green(green_domain(2)).unwrap(),
        helmholtz_green(green_domain(3), 16.0).unwrap(),
        helmholtz_green(green_domain(2), 10.0).unwrap(),
        curved_helmholtz(16.0).unwrap(),
    ];
    for (s, spec) in specs.iter().enumerate() {
        for x in random_points(&spec.domain, 20, s as u64) {
            let r = fd_residual(spec, &x);
            assert!(r <= 1e-7, "{} at {x:?}: {r}", spec.name);
        }
    }
}

#[test]
fn boundary_data_matches_exact_solution() {
    for spec in [poisson_green(green_domain(3)).unwrap(), curved_helmholtz(16.0).unwrap()] {
        let e = spec.exact.as_ref().unwrap();
        for x in random_points(&spec.domain, 10, 9) {
            assert_eq!((spec.g)(&x), e(&x));
        }
    }
}

#[test]
fn helmholtz_tends_to_poisson_as_kappa_vanishes() {
    let p = poisson_green(green_domain(3)).unwrap();
    let h = helmholtz_green(green_domain(3), 1e-9).unwrap();
    for x in random_points(&p.domain, 20, 3) {
        let (a, b) = (p.exact.as_ref().unwrap()(&x), h.exact.as_ref().unwrap()(&x));
        assert!((a - b).abs() <= 1e-15 * a.abs());
        assert!(h.coeffs.eval(&x).c.abs() < 1e-17);
    }
}

#[test]
fn gravity_coefficient_spans_expected_range() {
    let kappa = 20.0;
    let spec = gravity_helmholtz(gravity_domain(3), kappa).unwrap();
    assert!(spec.exact.is_none());
    let k2 = kappa * kappa;
    for x in random_points(&spec.domain, 50, 4) {
        let c = spec.coeffs.eval(&x).c;
        assert!((c + k2 * (1.0 - x[2])).abs() <= 1e-12 * k2);
        assert!(c <= -1.2 * k2 + 1e-9 && c >= -2.2 * k2 - 1e-9);
        assert_eq!((spec.f)(&x), 1.0);
        assert_eq!((spec.g)(&x), 0.0);
    }
}

#[test]
fn flat_curved_problem_is_plain_helmholtz() {
    let flat = curved_helmholtz_with(16.0, 0.0, 6.0).unwrap();
    let plain = helmholtz_green(curved_reference_box(), 16.0).unwrap();
    assert_eq!(flat.corner_mode(), CornerMode::LegendreFaces);
    for x in random_points(&flat.domain, 20, 5) {
        let (a, b) = (flat.coeffs.eval(&x), plain.coeffs.eval(&x));
        for k in 0..3 {
            for l in 0..3 {
                assert!((a.a[k][l] - b.a[k][l]).abs() < 1e-15);
            }
            assert!(a.b[k].abs() < 1e-15);
        }
        assert_eq!(a.c, b.c);
        assert_eq!(flat.exact.as_ref().unwrap()(&x), plain.exact.as_ref().unwrap()(&x));
    }
}

#[test]
fn green_domains_exclude_the_singularity() {
    assert!(matches!(
        poisson_green(DomainBox::new(vec![-1.0; 3], vec![1.0; 3]).unwrap()),
        Err(HpsError::InvalidProblem(_))
    ));
    assert!(helmholtz_green(DomainBox::unit(2).unwrap(), 1.0).is_err());
}

#[test]
fn registry_resolves_every_name() {
    for name in PROBLEM_NAMES {
        let p = problem_by_name(name, &ProblemParams::default()).unwrap();
        match p {
            Problem::Elliptic(s) => assert_eq!(s.name, name),
            Problem::Parabolic(s) => assert_eq!(s.name, name),
        }
    }
    assert!(matches!(
        problem_by_name("nope", &ProblemParams::default()),
        Err(HpsError::InvalidProblem(_))
    ));
    let params = ProblemParams {
        dim: 2,
        ..ProblemParams::default()
    };
    assert!(problem_by_name("curved_helmholtz", &params).is_err());
}

#[test]
fn ppw_wavenumber() {
    // Leaf width 0.25 with 11 nodes gives spacing 0.025, so ten nodes per
    // wavelength is a wavelength of 0.25.
    let k = kappa_for_ppw(11, 0.25, 10.0);
    assert!((k - 8.0 * PI).abs() < 1e-12);
}

#[test]
fn relative_error_matches_two_pass_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let exact: Vec<f64> = (0..1000).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u: Vec<f64> = exact.iter().map(|e| e + 1e-6 * rng.gen_range(-1.0..1.0)).collect();
    let num: f64 = u.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = exact.iter().map(|b| b * b).sum();
    let r = relative_l2_error(&u, &exact).unwrap();
    assert!((r - (num / den).sqrt()).abs() <= 1e-14 * r);
    assert_eq!(relative_l2_error(&exact, &exact).unwrap(), 0.0);
    assert_eq!(relative_l2_error(&[1.0], &[0.0]), Err(HpsError::ZeroNormReference));
    assert!(matches!(relative_l2_error(&[1.0], &[1.0, 2.0]), Err(HpsError::DimensionMismatch { .. })));
}

#[test]
fn interpolation_reproduces_low_degree_polynomials() {
    let disc = build_discretization(
        DomainBox::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap(),
        MeshConfig::uniform(2, 3, 8, CornerMode::DropCorners),
    )
    .unwrap();
    // Degree 5 per variable is exact on the 6 interior nodes of each axis.
    let q = |x: &[f64]| x[0].powi(5) - 2.0 * x[0] * x[1].powi(3) + 0.5;
    let u: Vec<f64> = (0..disc.n_nodes()).map(|i| q(disc.node(i))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(0.0..3.0)];
        let v = interpolate_interior(&disc, &u, &x).unwrap();
        assert!((v - q(&x)).abs() <= 1e-11 * (1.0 + q(&x).abs()), "{x:?}");
    }
    let node = disc.node(5).to_vec();
    assert_eq!(interpolate_interior(&disc, &u, &node).unwrap(), u[5]);
    assert!(interpolate_interior(&disc, &u, &[2.0, 1.0]).is_err());
}

fn keep() -> BatchSchedule {
    BatchSchedule::default().with_cache(CachePolicy::Keep)
}

#[test]
fn zero_operator_keeps_the_state() {
    let problem = ParabolicProblem {
        name: "frozen".into(),
        domain: DomainBox::unit(2).unwrap(),
        nu: 0.0,
        velocity: None,
        divergence: Arc::new(|_| 0.0),
        u0: Arc::new(|x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) * (x[0] + 2.0 * x[1])),
        exact: None,
    };
    let disc = Arc::new(
        build_discretization(problem.domain.clone(), MeshConfig::uniform(2, 2, 8, CornerMode::DropCorners)).unwrap(),
    );
    let cfg = TimeStepConfig::new(0.1, 1.0).unwrap();
    let traj = crank_nicolson_run(disc.clone(), &problem, &cfg, &keep()).unwrap();
    let u0 = &traj.snapshots[0].1;
    assert_eq!(traj.snapshots.len(), 2);
    for (a, b) in traj.final_state.iter().zip(u0) {
        assert!((a - b).abs() <= 1e-12);
    }
}

fn heat_error(dt: f64, t_end: f64) -> (f64, usize) {
    let problem = heat_manufactured(2);
    let disc = Arc::new(
        build_discretization(problem.domain.clone(), MeshConfig::uniform(2, 2, 14, CornerMode::DropCorners))
            .unwrap(),
    );
    let cfg = TimeStepConfig::new(dt, t_end).unwrap();
    let traj = crank_nicolson_run(disc.clone(), &problem, &cfg, &keep()).unwrap();
    let exact = problem.exact.as_ref().unwrap();
    let e: Vec<f64> = (0..disc.n_nodes()).map(|i| exact(disc.node(i), traj.final_time)).collect();
    (relative_l2_error(&traj.final_state, &e).unwrap(), traj.factorizations)
}

#[test]
fn heat_equation_converges_at_second_order_in_time() {
    let dts = [0.02, 0.01, 0.005];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let (e, nf) = heat_error(dt, 0.1);
            assert_eq!(nf, 1);
            e
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() <= 0.3, "errors {errs:?}");
    }
}

#[test]
fn snapshots_follow_the_stride() {
    let problem = heat_manufactured(2);
    let disc = Arc::new(
        build_discretization(problem.domain.clone(), MeshConfig::uniform(2, 2, 6, CornerMode::DropCorners)).unwrap(),
    );
    let cfg = TimeStepConfig {
        dt: 0.01,
        t_end: 0.1,
        snapshot_stride: 3,
    };
    let traj = crank_nicolson_run(disc, &problem, &cfg, &BatchSchedule::default()).unwrap();
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.0).collect();
    assert_eq!(times.len(), 5);
    assert_eq!(times[0], 0.0);
    assert!((times[1] - 0.03).abs() < 1e-15 && (times[4] - 0.1).abs() < 1e-15);
    assert_eq!(traj.step_times.len(), 10);
    assert!(traj.step_times[0].factorize > 0.0);
    assert!(traj.step_times[1..].iter().all(|t| t.factorize == 0.0));
}

#[test]
fn invalid_time_steps_are_rejected() {
    assert!(matches!(TimeStepConfig::new(0.0, 1.0), Err(HpsError::InvalidTimeStep(_))));
    assert!(matches!(TimeStepConfig::new(0.5, 0.1), Err(HpsError::InvalidTimeStep(_))));
    assert!(TimeStepConfig::new(f64::NAN, 1.0).is_err());
    assert_eq!(TimeStepConfig::new(0.1, 2.5).unwrap().steps(), 25);
}

#[test]
fn quadrature_weights_integrate_functions_vanishing_on_edges() {
    let (lo, hi, boxes) = ([0.0, -1.0, 0.5], [2.0, 1.0, 1.0], [2usize, 3, 1]);
    let disc = build_discretization(
        DomainBox::new(lo.to_vec(), hi.to_vec()).unwrap(),
        MeshConfig::new(boxes.to_vec(), 18, CornerMode::DropCorners),
    )
    .unwrap();
    let w = node_quadrature_weights(&disc).unwrap();
    // s_k vanishes on every leaf plane normal to axis k, so q vanishes on
    // all leaf edges (where nodes are dropped) but not on faces.
    let s = |x: &[f64], k: usize| (PI * boxes[k] as f64 * (x[k] - lo[k]) / (hi[k] - lo[k])).sin().powi(2);
    let q = |x: &[f64]| s(x, 0) * s(x, 1) + s(x, 0) * s(x, 2) + s(x, 1) * s(x, 2);
    let sum: f64 = (0..disc.n_nodes()).map(|i| w[i] * q(disc.node(i))).sum();
    // Each product of two squared sines averages to 1/4 over the box.
    let exact = 3.0 * 2.0 / 4.0;
    assert!((sum - exact).abs() < 1e-12 * exact, "{sum} vs {exact}");
    assert!(w.iter().all(|&v| v > 0.0));
}

#[test]
fn quadrature_weights_need_chebyshev_faces() {
    let disc = build_discretization(DomainBox::unit(2).unwrap(), MeshConfig::uniform(2, 2, 6, CornerMode::LegendreFaces))
        .unwrap();
    assert!(node_quadrature_weights(&disc).is_err());
}

#[test]
fn convection_diffusion_swirls_counterclockwise() {
    let problem = convection_diffusion();
    let disc = Arc::new(
        build_discretization(problem.domain.clone(), MeshConfig::uniform(3, 4, 8, CornerMode::DropCorners)).unwrap(),
    );
    let cfg = TimeStepConfig {
        dt: 0.1,
        t_end: 2.5,
        snapshot_stride: 5,
    };
    let traj = crank_nicolson_run(disc.clone(), &problem, &cfg, &keep()).unwrap();
    assert_eq!(traj.factorizations, 1);
    let w = node_quadrature_weights(&disc).unwrap();
    // The velocity scales with x₃, so the two halves turn in opposite senses.
    let upper = |x: &[f64]| x[2] > 0.0;
    let angles: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|(_, u)| {
            let (cx, cy) = mass_center(&disc, u, &w, &upper);
            cy.atan2(cx)
        })
        .collect();
    for a in angles.windows(2) {
        assert!(a[1] > a[0], "{angles:?}");
    }
}
