use std::collections::HashMap;

use hps_core::geometry::{sinusoidal_map, Neighbor, ParameterMap};
use hps_core::local_ops::spectral::{cheb_points, map_to_interval};
use hps_core::{build_discretization, leaf_neighbors, CornerMode, DomainBox, HpsError, MeshConfig, PointCoefficients};

#[derive(Default, Debug, PartialEq)]
struct Census {
    interior: usize,
    interface: usize,
    dirichlet: usize,
    dropped: usize,
}

/// Classifies every node of the union of leaf grids by its integer lattice
/// position, independently of the library's numbering.
fn brute_force(boxes: &[usize], p: usize) -> Census {
    let d = boxes.len();
    let m = p - 1;
    let extent: Vec<usize> = boxes.iter().map(|b| b * m + 1).collect();
    let total: usize = extent.iter().product();
    let mut c = Census::default();
    for flat in 0..total {
        let mut r = flat;
        let mut on_plane = 0;
        let mut on_outer = false;
        for k in 0..d {
            let g = r % extent[k];
            r /= extent[k];
            if g.is_multiple_of(m) {
                on_plane += 1;
                if g == 0 || g == extent[k] - 1 {
                    on_outer = true;
                }
            }
        }
        match on_plane {
            0 => c.interior += 1,
            1 if on_outer => c.dirichlet += 1,
            1 => c.interface += 1,
            _ => c.dropped += 1,
        }
    }
    c
}

fn unit_disc(boxes: &[usize], p: usize, mode: CornerMode) -> hps_core::Discretization {
    build_discretization(DomainBox::unit(boxes.len()).unwrap(), MeshConfig::new(boxes.to_vec(), p, mode)).unwrap()
}

#[test]
fn single_leaf_square() {
    let g = unit_disc(&[1, 1], 6, CornerMode::DropCorners);
    assert_eq!((g.n_interior(), g.n_interface(), g.n_dirichlet()), (16, 0, 16));
    assert_eq!(brute_force(&[1, 1], 6).dropped, 4);
}

#[test]
fn two_leaves_share_one_face() {
    let g = unit_disc(&[2, 1], 6, CornerMode::DropCorners);
    assert_eq!(g.n_interface(), 4);
    assert_eq!(g.faces().iter().filter(|f| f.is_interface()).count(), 1);
    assert_eq!(brute_force(&[2, 1], 6).interface, 4);
}

#[test]
fn cube_of_eight_leaves_has_432_interface_dofs() {
    let g = unit_disc(&[2, 2, 2], 8, CornerMode::DropCorners);
    assert_eq!(g.n_interface(), 432);
    assert_eq!(brute_force(&[2, 2, 2], 8).interface, 432);
}

#[test]
fn partition_matches_brute_force_classification() {
    let cases: &[&[usize]] = &[&[1, 1], &[2, 1], &[3, 2], &[4, 4], &[1, 1, 1], &[2, 1, 3], &[3, 3, 3]];
    for boxes in cases {
        for p in [4, 5, 7] {
            let g = unit_disc(boxes, p, CornerMode::DropCorners);
            let c = brute_force(boxes, p);
            assert_eq!(g.n_interior(), c.interior, "{boxes:?} p={p}");
            assert_eq!(g.n_interface(), c.interface, "{boxes:?} p={p}");
            assert_eq!(g.n_dirichlet(), c.dirichlet, "{boxes:?} p={p}");
            let d = boxes.len();
            let lattice: usize = boxes.iter().map(|b| b * (p - 1) + 1).product();
            assert_eq!(g.n_nodes() + c.dropped, lattice);
            assert_eq!(g.interior_per_leaf(), (p - 2).pow(d as u32));
            assert_eq!(g.face_dofs(), (p - 2).pow(d as u32 - 1));
        }
    }
}

#[test]
fn legendre_faces_carry_p_minus_one_nodes_per_direction() {
    let g = unit_disc(&[2, 3, 1], 6, CornerMode::LegendreFaces);
    assert_eq!(g.face_dofs(), 25);
    assert_eq!(g.interior_per_leaf(), 64);
    let shared = g.faces().iter().filter(|f| f.is_interface()).count();
    assert_eq!(g.n_interface(), shared * 25);
    // Face nodes sit at Gauss–Legendre points, so none coincide with a
    // Chebyshev node of the tangential axes.
    let f = g.faces().iter().find(|f| f.is_interface() && f.axis == 0).unwrap();
    let x = g.node(f.first_dof);
    let leaf = &g.leaves()[f.lower.unwrap()];
    for (k, t) in [(1usize, x[1]), (2, x[2])] {
        assert!(cheb_points(6).iter().all(|&s| map_to_interval(s, leaf.lo[k], leaf.hi[k]) != t));
    }
}

#[test]
fn every_id_is_classified_exactly_once() {
    let g = unit_disc(&[3, 2, 2], 5, CornerMode::DropCorners);
    let mut count = vec![0u8; g.n_nodes()];
    for l in 0..g.leaf_count() {
        for id in g.interior_ids(l) {
            count[id] += 1;
        }
    }
    for id in g.interface_ids().chain(g.dirichlet_ids()) {
        count[id] += 1;
    }
    assert!(count.iter().all(|&c| c == 1));
    // Interface ids are referenced by exactly two leaves, Dirichlet ids by one.
    let mut refs: HashMap<usize, usize> = HashMap::new();
    for l in 0..g.leaf_count() {
        for id in g.leaf_boundary_ids(l) {
            *refs.entry(id).or_default() += 1;
        }
    }
    for id in g.interface_ids() {
        assert_eq!(refs[&id], 2);
    }
    for id in g.dirichlet_ids() {
        assert_eq!(refs[&id], 1);
    }
}

#[test]
fn permuting_box_counts_gives_isomorphic_index_maps() {
    for p in [5, 6] {
        let a = unit_disc(&[2, 3, 4], p, CornerMode::DropCorners);
        for perm in [[3, 2, 4], [4, 3, 2], [2, 4, 3]] {
            let b = unit_disc(&perm, p, CornerMode::DropCorners);
            assert_eq!(
                (a.n_interior(), a.n_interface(), a.n_dirichlet()),
                (b.n_interior(), b.n_interface(), b.n_dirichlet())
            );
        }
    }
}

#[test]
fn neighbor_lists() {
    let g = unit_disc(&[1, 1], 5, CornerMode::DropCorners);
    let n = leaf_neighbors(&g, 0).unwrap();
    assert_eq!(n.len(), 4);
    assert!(n.iter().all(|(_, x)| *x == Neighbor::Dirichlet));

    let g = unit_disc(&[2, 1], 5, CornerMode::DropCorners);
    let n = leaf_neighbors(&g, 0).unwrap();
    assert_eq!(n[1].1, Neighbor::Leaf(1));
    assert_eq!(leaf_neighbors(&g, 1).unwrap()[0].1, Neighbor::Leaf(0));
    assert_eq!(n[1].0, leaf_neighbors(&g, 1).unwrap()[0].0);

    let g = unit_disc(&[3, 3], 5, CornerMode::DropCorners);
    assert!(leaf_neighbors(&g, 4).unwrap().iter().all(|(_, x)| *x != Neighbor::Dirichlet));

    let g = unit_disc(&[2, 2, 2], 5, CornerMode::DropCorners);
    assert_eq!(leaf_neighbors(&g, 0).unwrap().len(), 6);
    assert_eq!(leaf_neighbors(&g, 8), Err(HpsError::LeafOutOfRange { leaf: 8, count: 8 }));
}

#[test]
fn shared_face_nodes_agree_from_both_leaves() {
    let dom = DomainBox::new(vec![-1.1, 1.0, 1.2], vec![0.1, 2.0, 2.2]).unwrap();
    let g = build_discretization(dom, MeshConfig::uniform(3, 3, 7, CornerMode::DropCorners)).unwrap();
    let t = cheb_points(7);
    for f in g.faces().iter().filter(|f| f.is_interface()) {
        let lower = &g.leaves()[f.lower.unwrap()];
        let upper = &g.leaves()[f.upper.unwrap()];
        for k in 0..3 {
            // Tangential coordinates come from the same bounds on both sides.
            if k != f.axis {
                assert_eq!(lower.lo[k].to_bits(), upper.lo[k].to_bits());
                assert_eq!(lower.hi[k].to_bits(), upper.hi[k].to_bits());
            }
        }
        let from_lower = map_to_interval(t[6], lower.lo[f.axis], lower.hi[f.axis]);
        let from_upper = map_to_interval(t[0], upper.lo[f.axis], upper.hi[f.axis]);
        assert_eq!(from_lower.to_bits(), from_upper.to_bits());
    }
}

#[test]
fn invalid_meshes_are_rejected() {
    let dom = DomainBox::unit(2).unwrap();
    assert!(matches!(
        build_discretization(dom.clone(), MeshConfig::uniform(2, 2, 3, CornerMode::DropCorners)),
        Err(HpsError::OrderTooSmall { p: 3, min: 4 })
    ));
    assert!(build_discretization(dom.clone(), MeshConfig::new(vec![2, 0], 5, CornerMode::DropCorners)).is_err());
    assert!(build_discretization(dom, MeshConfig::new(vec![2, 2, 2], 5, CornerMode::DropCorners)).is_err());
    assert!(DomainBox::new(vec![0.0; 4], vec![1.0; 4]).is_err());
    assert!(DomainBox::new(vec![0.0, 0.0], vec![1.0, f64::NAN]).is_err());
}

fn sample_coefficients(x: &[f64]) -> PointCoefficients {
    PointCoefficients {
        a: [[1.0 + x[0] * x[0], 0.1 * x[1], 0.0], [0.1 * x[1], 2.0, 0.3], [0.0, 0.3, 1.5]],
        b: [x[2], -0.5, x[0] * x[1]],
        c: (x[0] + x[1]).sin(),
    }
}

#[test]
fn identity_map_leaves_coefficients_unchanged() {
    let map = ParameterMap::identity(3);
    for i in 0..50 {
        let s = i as f64 / 49.0;
        let x = [1.1 + s, -1.0 + 0.7 * s, -1.2 + (3.0 * s).sin().abs()];
        let pc = sample_coefficients(&x);
        assert_eq!(map.transform(&x, &pc), pc);
        assert_eq!(map.forward(&x), x.to_vec());
    }
}

#[test]
fn sinusoidal_map_matches_closed_form_coefficients() {
    let map = sinusoidal_map(0.25, 6.0).unwrap();
    for &(x1, x2, x3) in &[(1.3f64, -0.4, -0.7), (1.9, -0.95, -0.3), (2.05, -0.01, -1.1)] {
        let x = [x1, x2, x3];
        let psi = 1.0 - 0.25 * (6.0 * x1).sin();
        let dpsi = -1.5 * (6.0 * x1).cos();
        let ddpsi = 9.0 * (6.0 * x1).sin();
        let y2 = x2 / psi;
        let pc = map.transform(&x, &PointCoefficients::isotropic(3, 1.0, -4.0));
        let tol = 1e-14;
        assert!((pc.a[0][0] - 1.0).abs() < tol);
        assert!((pc.a[1][1] - (dpsi * y2 * dpsi * y2 + psi * psi)).abs() < tol);
        assert!((pc.a[2][2] - 1.0).abs() < tol);
        assert!((pc.a[0][1] + pc.a[1][0] - 2.0 * dpsi * y2).abs() < tol);
        assert!((pc.b[1] - ddpsi * y2).abs() < 1e-13);
        assert_eq!(pc.b[0], 0.0);
        assert_eq!(pc.c, -4.0);
        let y = map.forward(&x);
        assert_eq!(y[1], y2);
    }
}

#[test]
fn sinusoidal_map_cross_term_vanishes_where_psi_is_stationary() {
    let map = sinusoidal_map(0.25, 6.0).unwrap();
    let x1 = std::f64::consts::FRAC_PI_2 / 6.0 + std::f64::consts::PI / 6.0 * 2.0;
    let pc = map.transform(&[x1, -0.5, -0.5], &PointCoefficients::isotropic(3, 1.0, 0.0));
    assert!(pc.a[0][1].abs() < 1e-14);
}

#[test]
fn zero_amplitude_map_is_the_identity() {
    let map = sinusoidal_map(0.0, 6.0).unwrap();
    let pc = PointCoefficients::isotropic(3, 1.0, -256.0);
    let out = map.transform(&[1.4, -0.3, -0.9], &pc);
    assert_eq!(out, pc);
    assert!(sinusoidal_map(-1.0, 6.0).is_err());
    assert!(sinusoidal_map(f64::NAN, 6.0).is_err());
}
