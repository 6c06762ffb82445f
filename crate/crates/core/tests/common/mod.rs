//! Shared oracles for the integration tests: dense linear algebra through
//! nalgebra, finite differences, and Gauss-Hermite quadrature. Everything
//! here is deliberately independent of the library's own numerics.

#![allow(dead_code)] // each test binary uses its own subset

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use latvol::band::SymBandMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    use rand_distr::StandardNormal;
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Expand a symmetric band matrix to dense.
pub fn band_to_dense(a: &SymBandMatrix) -> DMatrix<f64> {
    let n = a.dim();
    DMatrix::from_fn(n, n, |i, j| a.get(i, j))
}

/// Dense symmetric Toeplitz matrix from an autocovariance sequence.
pub fn toeplitz_dense(gamma: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| gamma[i.abs_diff(j)])
}

/// Solve `A x = b` densely (LU with partial pivoting).
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let sol = a
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("oracle matrix is invertible");
    sol.iter().copied().collect()
}

/// Log determinant of a symmetric positive definite dense matrix.
pub fn dense_logdet_spd(a: &DMatrix<f64>) -> f64 {
    let chol = a.clone().cholesky().expect("oracle matrix is SPD");
    2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let e = eps * x[i].abs().max(1.0);
        xp[i] = x[i] + e;
        let fp = f(&xp);
        xp[i] = x[i] - e;
        let fm = f(&xp);
        xp[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * e);
    }
    grad
}

/// Central finite-difference Jacobian of a vector function `g` at `x`;
/// used as a Hessian oracle by differencing an analytic gradient.
pub fn fd_jacobian(
    g: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    eps: f64,
) -> DMatrix<f64> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let e = eps * x[j].abs().max(1.0);
        xp[j] = x[j] + e;
        let gp = g(&xp);
        xp[j] = x[j] - e;
        let gm = g(&xp);
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * e);
        }
    }
    jac
}

/// Gauss-Hermite nodes and weights for `n` points (weight `exp(-x^2)`),
/// computed from the eigendecomposition of the Jacobi matrix. The weights
/// sum to `sqrt(pi)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (node, std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gaussian density, used by quadrature oracles.
pub fn normal_pdf(x: f64, variance: f64) -> f64 {
    (-x * x / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// Marginal density of a single return whose log-variance is
/// `N(0, gamma0)`: `p(x) = E[ N(x; 0, s2 e^h) ]`, by Gauss-Hermite
/// quadrature with `n` points.
pub fn marginal_density_quadrature(x: f64, s2: f64, gamma0: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_hermite(n);
    let scale = (2.0 * gamma0).sqrt();
    let mut acc = 0.0;
    for (t, w) in nodes.iter().zip(weights.iter()) {
        acc += w * normal_pdf(x, s2 * (scale * t).exp());
    }
    acc / std::f64::consts::PI.sqrt()
}

/// A random autocovariance sequence that is strictly positive definite:
/// either an MRW log-decay or an AR(1) geometric decay, scaled randomly.
pub fn random_autocov(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let scale: f64 = rng.random_range(0.2..5.0);
    if rng.random_bool(0.5) {
        let lambda: f64 = rng.random_range(0.1..1.2);
        let r: f64 = rng.random_range(2.0..1000.0);
        latvol::toeplitz::mrw_autocov(lambda, r, len - 1)
            .unwrap()
            .into_iter()
            .map(|g| scale * g)
            .collect()
    } else {
        let rho: f64 = rng.random_range(-0.95..0.95);
        (0..len).map(|k| scale * rho.powi(k as i32)).collect()
    }
}
