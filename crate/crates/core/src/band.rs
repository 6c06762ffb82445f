//! Symmetric band matrices and their Cholesky factorization.
//!
//! The latent-field curvature matrices handled here are symmetric with a
//! small bandwidth (1 for the AR(1) volatility model, the truncation depth
//! for the multifractal model), so an O(T * b^2) banded Cholesky replaces the
//! O(T^3) dense one. Storage is lower-triangular, diagonal-major: the entry
//! (i, j) with d = i - j in 0..=bandwidth lives at `data[d * dim + j]`.

use crate::error::{Error, Result};

/// Symmetric matrix with entries vanishing beyond a fixed band.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBandMatrix {
    dim: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl SymBandMatrix {
    /// Zero matrix of the given dimension and bandwidth. The bandwidth is
    /// clamped to `dim - 1`, the widest band a matrix of that size can have.
    pub fn zeros(dim: usize, bandwidth: usize) -> Self {
        assert!(dim > 0, "band matrix must have positive dimension");
        let bandwidth = bandwidth.min(dim - 1);
        SymBandMatrix {
            dim,
            bandwidth,
            data: vec![0.0; (bandwidth + 1) * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Entry (i, j); zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bandwidth {
            0.0
        } else {
            self.data[d * self.dim + lo]
        }
    }

    /// Set entry (i, j) (and its mirror). Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.bandwidth, "entry ({i}, {j}) outside bandwidth");
        self.data[d * self.dim + lo] = value;
    }

    /// Add `value` to entry (i, j) (and its mirror). Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.bandwidth, "entry ({i}, {j}) outside bandwidth");
        self.data[d * self.dim + lo] += value;
    }

    /// Add `value` to the diagonal entry (i, i).
    pub fn add_diag(&mut self, i: usize, value: f64) {
        self.data[i] += value;
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for j in 0..self.dim {
            out[j] += self.data[j] * v[j];
            let dmax = self.bandwidth.min(self.dim - 1 - j);
            for d in 1..=dmax {
                let a = self.data[d * self.dim + j];
                out[j + d] += a * v[j];
                out[j] += a * v[j + d];
            }
        }
        out
    }

    /// The matrix with every entry negated (used to factor -Omega, which is
    /// positive definite when Omega is the curvature of a concave objective).
    pub fn negated(&self) -> SymBandMatrix {
        SymBandMatrix {
            dim: self.dim,
            bandwidth: self.bandwidth,
            data: self.data.iter().map(|a| -a).collect(),
        }
    }

    /// Banded Cholesky factorization `self = L L^T` with lower-band `L`.
    ///
    /// Fails with [`Error::NotPositiveDefinite`] at the first non-positive
    /// pivot.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let n = self.dim;
        let b = self.bandwidth;
        let mut l = vec![0.0; (b + 1) * n];
        for j in 0..n {
            let kmin = j.saturating_sub(b);
            let mut s = self.data[j];
            for k in kmin..j {
                let v = l[(j - k) * n + k];
                s -= v * v;
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot: s });
            }
            let ljj = s.sqrt();
            l[j] = ljj;
            let imax = (j + b).min(n - 1);
            for i in (j + 1)..=imax {
                let kmin = i.saturating_sub(b);
                let mut s = if i - j <= b { self.data[(i - j) * n + j] } else { 0.0 };
                for k in kmin..j {
                    s -= l[(i - k) * n + k] * l[(j - k) * n + k];
                }
                l[(i - j) * n + j] = s / ljj;
            }
        }
        Ok(BandCholesky {
            dim: n,
            bandwidth: b,
            data: l,
        })
    }
}

/// Lower-band Cholesky factor of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    dim: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// log det(M) = 2 * sum(log L_jj) for M = L L^T.
    pub fn log_det(&self) -> f64 {
        (0..self.dim).map(|j| self.data[j].ln()).sum::<f64>() * 2.0
    }

    /// Solve `M y = rhs` by forward and back substitution.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.dim);
        let n = self.dim;
        let b = self.bandwidth;
        // forward: L z = rhs
        let mut z = rhs.to_vec();
        for j in 0..n {
            let kmin = j.saturating_sub(b);
            let mut s = z[j];
            for k in kmin..j {
                s -= self.data[(j - k) * n + k] * z[k];
            }
            z[j] = s / self.data[j];
        }
        // backward: L^T y = z
        for j in (0..n).rev() {
            let imax = (j + b).min(n - 1);
            let mut s = z[j];
            for i in (j + 1)..=imax {
                s -= self.data[(i - j) * n + j] * z[i];
            }
            z[j] = s / self.data[j];
        }
        z
    }
}
