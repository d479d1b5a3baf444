//! One-dimensional spectral building blocks: Chebyshev–Lobatto points,
//! differentiation matrices, Gauss–Legendre rules and barycentric
//! interpolation between point sets.

use std::f64::consts::PI;

use crate::dense::Mat;
use crate::error::{HpsError, Result};

/// Chebyshev–Lobatto points on [-1, 1] in ascending order.
///
/// The sine form keeps the set exactly antisymmetric and the endpoints exact.
pub fn cheb_points(p: usize) -> Vec<f64> {
    assert!(p >= 2);
    let n = (p - 1) as f64;
    (0..p)
        .map(|j| {
            let k = 2.0 * j as f64 - n;
            (PI * k / (2.0 * n)).sin()
        })
        .collect()
}

/// Maps a reference coordinate in [-1, 1] to [a, b]; exact at both ends.
#[inline]
pub fn map_to_interval(t: f64, a: f64, b: f64) -> f64 {
    0.5 * (a * (1.0 - t) + b * (1.0 + t))
}

/// `p` Chebyshev–Lobatto nodes on `[a, b]`, ascending.
pub fn cheb_nodes(p: usize, a: f64, b: f64) -> Result<Vec<f64>> {
    if p < 2 {
        return Err(HpsError::OrderTooSmall { p, min: 2 });
    }
    Ok(cheb_points(p).into_iter().map(|t| map_to_interval(t, a, b)).collect())
}

fn cheb_bary_weights(p: usize) -> Vec<f64> {
    (0..p)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == p - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Differentiation matrix on the ascending Chebyshev–Lobatto points of [-1, 1].
///
/// Off-diagonal entries use the barycentric formula; each diagonal entry is the
/// negative sum of its row so that constants are differentiated to zero
/// exactly.
pub fn cheb_diff_matrix(p: usize) -> Result<Mat> {
    if p < 2 {
        return Err(HpsError::OrderTooSmall { p, min: 2 });
    }
    let t = cheb_points(p);
    let w = cheb_bary_weights(p);
    let mut d = Mat::zeros(p, p);
    for i in 0..p {
        let mut sum = 0.0;
        for j in 0..p {
            if i != j {
                let v = (w[j] / w[i]) / (t[i] - t[j]);
                d[(i, j)] = v;
                sum += v;
            }
        }
        d[(i, i)] = -sum;
    }
    Ok(d)
}

/// Gauss–Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (pn, dpn) = legendre_with_derivative(n, z);
            dp = dpn;
            let dz = pn / dpn;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dpn) = legendre_with_derivative(n, z);
        dp = if dpn != 0.0 { dpn } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Barycentric weights for an arbitrary set of distinct points.
pub fn bary_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let prod: f64 = (0..x.len())
                .filter(|&k| k != j)
                .map(|k| x[j] - x[k])
                .product();
            1.0 / prod
        })
        .collect()
}

/// Matrix evaluating the interpolant through `(src, ·)` at the points `dst`.
pub fn interp_matrix(src: &[f64], dst: &[f64]) -> Mat {
    let w = bary_weights(src);
    let mut m = Mat::zeros(dst.len(), src.len());
    for (i, &y) in dst.iter().enumerate() {
        if let Some(j) = src.iter().position(|&s| s == y) {
            m[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = src.iter().zip(&w).map(|(&s, &wj)| wj / (y - s)).collect();
        let denom: f64 = terms.iter().sum();
        for (j, t) in terms.iter().enumerate() {
            m[(i, j)] = t / denom;
        }
    }
    m
}

/// Kronecker product `a ⊗ b` (row index of `b` runs fastest).
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    Mat::from_fn(a.rows() * b.rows(), a.cols() * b.cols(), |i, j| {
        a[(i / b.rows(), j / b.cols())] * b[(i % b.rows(), j % b.cols())]
    })
}

/// Interpolation between a face's Chebyshev tensor grid (`p` points per
/// tangential axis) and its Gauss–Legendre grid (`p - 1` points per axis).
///
/// Returns `(forward, reverse)`: forward is `(p-1)^(d-1) × p^(d-1)`, reverse
/// the opposite shape. Face data is ordered with the first tangential axis
/// fastest.
pub fn face_interp_cheb_to_legendre(p: usize, d: usize) -> Result<(Mat, Mat)> {
    if p < 4 {
        return Err(HpsError::OrderTooSmall { p, min: 4 });
    }
    if !(2..=3).contains(&d) {
        return Err(HpsError::InvalidDomain(format!("dimension {d} not supported")));
    }
    let (fwd, rev) = interp_1d_cheb_legendre(p);
    if d == 2 {
        Ok((fwd, rev))
    } else {
        Ok((kron(&fwd, &fwd), kron(&rev, &rev)))
    }
}

/// 1D forward (`(p-1) × p`) and reverse (`p × (p-1)`) interpolation matrices.
pub fn interp_1d_cheb_legendre(p: usize) -> (Mat, Mat) {
    let c = cheb_points(p);
    let (g, _) = gauss_legendre(p - 1);
    (interp_matrix(&c, &g), interp_matrix(&g, &c))
}

/// Clenshaw–Curtis weights for the Chebyshev–Lobatto points on [-1, 1].
pub fn clenshaw_curtis_weights(p: usize) -> Vec<f64> {
    assert!(p >= 2);
    let n = p - 1;
    let t: Vec<f64> = (0..p).map(|j| PI * j as f64 / n as f64).collect();
    let mut w = vec![0.0; p];
    let mut v = vec![1.0; n.saturating_sub(1)];
    let interior = 1..n;
    if n.is_multiple_of(2) {
        let w0 = 1.0 / ((n * n) as f64 - 1.0);
        w[0] = w0;
        w[n] = w0;
        for k in 1..n / 2 {
            for (vi, j) in v.iter_mut().zip(interior.clone()) {
                *vi -= 2.0 * (2.0 * k as f64 * t[j]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (vi, j) in v.iter_mut().zip(interior.clone()) {
            *vi -= (n as f64 * t[j]).cos() / ((n * n) as f64 - 1.0);
        }
    } else {
        let w0 = 1.0 / (n * n) as f64;
        w[0] = w0;
        w[n] = w0;
        for k in 1..=(n - 1) / 2 {
            for (vi, j) in v.iter_mut().zip(interior.clone()) {
                *vi -= 2.0 * (2.0 * k as f64 * t[j]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (vi, j) in v.iter().zip(interior) {
        w[j] = 2.0 * vi / n as f64;
    }
    // Points above run from +1 down to -1; the weights are symmetric anyway.
    w
}
