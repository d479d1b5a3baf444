#![allow(dead_code)]

use hps_core::dense::Mat;

/// Unblocked Gaussian elimination with partial pivoting on a copy of `a`,
/// applied to every column of `b`.
pub fn naive_solve(a: &Mat, b: &Mat) -> Mat {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    let r = b.cols();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut x: Vec<Vec<f64>> = (0..n).map(|i| b.row(i).to_vec()).collect();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        m.swap(k, piv);
        x.swap(k, piv);
        let d = m[k][k];
        assert!(d != 0.0, "singular matrix in oracle");
        for i in k + 1..n {
            let l = m[i][k] / d;
            if l == 0.0 {
                continue;
            }
            for j in k..n {
                m[i][j] -= l * m[k][j];
            }
            for j in 0..r {
                x[i][j] -= l * x[k][j];
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..r {
            let mut s = x[k][j];
            for c in k + 1..n {
                s -= m[k][c] * x[c][j];
            }
            x[k][j] = s / m[k][k];
        }
    }
    Mat::from_fn(n, r, |i, j| x[i][j])
}

pub fn naive_solve_vec(a: &Mat, b: &[f64]) -> Vec<f64> {
    naive_solve(a, &Mat::from_vec(b.len(), 1, b.to_vec())).into_vec()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Random sparse `n × n` matrix with roughly `density·n²` off-pattern entries
/// in [−1, 1] plus a dominant entry on a random permutation, so the diagonal
/// itself is usually zero and row pivoting is needed.
pub fn random_sparse(seed: u64, n: usize, density: f64) -> hps_core::SparseMatrix {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut t = Vec::new();
    let dom = 1.0 + density * n as f64;
    for (i, &j) in perm.iter().enumerate() {
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        t.push((i, j, s * rng.gen_range(dom..2.0 * dom)));
    }
    let extra = (density * (n * n) as f64).round() as usize;
    for _ in 0..extra {
        t.push((rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(-1.0..1.0)));
    }
    hps_core::SparseMatrix::from_triplets(n, n, &t).unwrap()
}

pub fn random_vec(seed: u64, n: usize) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest absolute row sum.
pub fn matrix_norm_inf(m: &hps_core::SparseMatrix) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).1.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}
