//! Toeplitz machinery for stationary autocovariance sequences.
//!
//! Everything here works on a plain slice `gamma` with `gamma[k]` the
//! autocovariance at lag k. The Durbin-Levinson recursion produces, stage by
//! stage, the best-linear-predictor coefficients phi^(t) solving
//! `Gamma_t phi = (gamma(1), ..., gamma(t))` together with the innovation
//! variances `P_t = gamma(0) - gamma_{1:t-1}' Gamma_{t-1}^{-1} gamma_{1:t-1}`,
//! in O(t^2) time without ever forming the Toeplitz matrix. A general
//! right-hand-side variant (Levinson) solves `Gamma_t y = b` for arbitrary b,
//! which is what multi-step prediction coefficients need.

use crate::error::{Error, Result};

/// Relative floor for innovation variances: the recursion declares the
/// sequence numerically non-positive-definite once `P_t < PD_TOL * gamma(0)`.
pub const PD_TOL: f64 = 1e-12;

/// Log-decaying autocovariance `gamma(k) = lambda^2 * max(ln(R / (k+1)), 0)`
/// for lags `0..=max_lag`. The cutoff makes the sequence exactly zero once
/// `k + 1 >= R`; `r` may be any real number greater than 1.
pub fn mrw_autocov(lambda: f64, r: f64, max_lag: usize) -> Result<Vec<f64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            constraint: "must be positive and finite",
        });
    }
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            constraint: "must be greater than 1 and finite",
        });
    }
    let l2 = lambda * lambda;
    Ok((0..=max_lag)
        .map(|k| {
            let v = (r / (k + 1) as f64).ln();
            if v > 0.0 {
                l2 * v
            } else {
                0.0
            }
        })
        .collect())
}

/// Streaming state of the Durbin-Levinson recursion: after `advance` has run
/// t times, `phi` holds phi^(t) and `p` the innovation variance P_{t+1}.
///
/// Kept lean on purpose (O(t) memory) so that O(T) consumers -- the exact
/// Gaussian sampler and the general right-hand-side solver -- can run at
/// lags in the hundreds of thousands where materializing every stage would
/// not fit in memory.
#[derive(Debug, Clone)]
pub(crate) struct LevinsonState {
    pub phi: Vec<f64>,
    pub p: f64,
    gamma0: f64,
}

impl LevinsonState {
    pub fn new(gamma0: f64) -> Result<Self> {
        if !(gamma0 > 0.0) || !gamma0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma(0)",
                value: gamma0,
                constraint: "must be positive and finite",
            });
        }
        Ok(LevinsonState {
            phi: Vec::new(),
            p: gamma0,
            gamma0,
        })
    }

    /// Current stage t (length of `phi`).
    pub fn stage(&self) -> usize {
        self.phi.len()
    }

    /// Advance from stage t to t + 1 using `gamma[..=t+1]`.
    pub fn advance(&mut self, gamma: &[f64]) -> Result<()> {
        let t = self.phi.len();
        debug_assert!(gamma.len() > t + 1, "need gamma up to lag t+1");
        // reflection coefficient kappa_{t+1}
        let mut acc = gamma[t + 1];
        for (j, &c) in self.phi.iter().enumerate() {
            acc -= c * gamma[t - j];
        }
        let kappa = acc / self.p;
        // phi^(t+1)_j = phi^(t)_j - kappa * phi^(t)_{t-1-j}, updated in
        // symmetric pairs so no scratch copy is needed.
        if t > 0 {
            let (mut lo, mut hi) = (0, t - 1);
            while lo < hi {
                let (a, b) = (self.phi[lo], self.phi[hi]);
                self.phi[lo] = a - kappa * b;
                self.phi[hi] = b - kappa * a;
                lo += 1;
                hi -= 1;
            }
            if lo == hi {
                self.phi[lo] *= 1.0 - kappa;
            }
        }
        self.phi.push(kappa);
        self.p *= 1.0 - kappa * kappa;
        if !(self.p > PD_TOL * self.gamma0) || !kappa.is_finite() {
            return Err(Error::NotPositiveDefinite {
                index: t + 1,
                pivot: self.p,
            });
        }
        Ok(())
    }
}

/// Every stage of the Durbin-Levinson recursion up to a given order.
#[derive(Debug, Clone)]
pub struct ToeplitzSolution {
    /// `phi[t-1]` is the stage-t coefficient vector phi^(t), t = 1..=order.
    pub phi: Vec<Vec<f64>>,
    /// Innovation variances `P_1..=P_{order+1}` (so `order + 1` entries,
    /// starting at `P_1 = gamma(0)`).
    pub innovation_variances: Vec<f64>,
}

/// Run the Durbin-Levinson recursion to the given order.
///
/// Requires `gamma.len() >= order + 1`. Memory is O(order^2) because every
/// stage is kept; use [`toeplitz_solve`] or [`forecast_coefficients`] when
/// only a final-stage answer is needed.
pub fn durbin_levinson(gamma: &[f64], order: usize) -> Result<ToeplitzSolution> {
    if gamma.len() < order + 1 {
        return Err(Error::DimensionMismatch {
            expected: order + 1,
            actual: gamma.len(),
        });
    }
    let mut state = LevinsonState::new(gamma[0])?;
    let mut phi = Vec::with_capacity(order);
    let mut vars = Vec::with_capacity(order + 1);
    vars.push(state.p);
    for _ in 0..order {
        state.advance(gamma)?;
        phi.push(state.phi.clone());
        vars.push(state.p);
    }
    Ok(ToeplitzSolution {
        phi,
        innovation_variances: vars,
    })
}

/// Solve the symmetric Toeplitz system `Gamma y = rhs`, where `Gamma` has
/// first row `(gamma(0), ..., gamma(T-1))` and `T = rhs.len()`.
///
/// Classic Levinson recursion with a general right-hand side: the predictor
/// vectors from Durbin-Levinson extend the solution one stage at a time, in
/// O(T^2) time and O(T) memory.
pub fn toeplitz_solve(gamma: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let t_len = rhs.len();
    if t_len == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if gamma.len() < t_len {
        return Err(Error::DimensionMismatch {
            expected: t_len,
            actual: gamma.len(),
        });
    }
    let mut state = LevinsonState::new(gamma[0])?;
    let mut y = Vec::with_capacity(t_len);
    y.push(rhs[0] / gamma[0]);
    for k in 1..t_len {
        state.advance(gamma)?; // phi^(k), P_{k+1}
        debug_assert_eq!(state.stage(), k);
        let mut acc = rhs[k];
        for (j, &yj) in y.iter().enumerate() {
            acc -= yj * gamma[k - j];
        }
        let mu = acc / state.p;
        for (j, yj) in y.iter_mut().enumerate() {
            *yj -= mu * state.phi[k - 1 - j];
        }
        y.push(mu);
    }
    Ok(y)
}

/// Coefficients and variance of the N-step-ahead best linear predictor.
///
/// Returns `(phi, var)` where `phi` solves
/// `Gamma_T phi = (gamma(N), ..., gamma(N + T - 1))` -- the predictor of the
/// field N steps past the window, applied to the window in reverse time
/// order (most recent value first) -- and
/// `var = gamma(0) - rhs' Gamma_T^{-1} rhs` is the prediction variance.
///
/// With `horizon == 1` this is exactly the final Durbin-Levinson stage, and
/// the implementation delegates to it so the identity is bit-for-bit.
/// Requires `gamma.len() >= t_len + horizon`.
pub fn forecast_coefficients(
    gamma: &[f64],
    t_len: usize,
    horizon: usize,
) -> Result<(Vec<f64>, f64)> {
    if t_len == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: 0.0,
            constraint: "must be at least 1",
        });
    }
    if gamma.len() < t_len + horizon {
        return Err(Error::DimensionMismatch {
            expected: t_len + horizon,
            actual: gamma.len(),
        });
    }
    if horizon == 1 {
        let mut state = LevinsonState::new(gamma[0])?;
        for _ in 0..t_len {
            state.advance(gamma)?;
        }
        return Ok((state.phi, state.p));
    }
    let rhs = &gamma[horizon..horizon + t_len];
    let phi = toeplitz_solve(gamma, rhs)?;
    let mut var = gamma[0];
    for (r, c) in rhs.iter().zip(phi.iter()) {
        var -= r * c;
    }
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::NotPositiveDefinite {
            index: t_len,
            pivot: var,
        });
    }
    Ok((phi, var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mrw_autocov_closed_form_values() {
        // lambda = 0.5, R = 100: gamma(0) = 0.25 ln 100 ~= 1.151293
        let g = mrw_autocov(0.5, 100.0, 0).unwrap();
        assert!((g[0] - 0.25 * 100f64.ln()).abs() < 1e-15);
        assert!((g[0] - 1.151293).abs() < 1e-6);
        // R = 4 is an integer lag bound: gamma(k) = 0 for k + 1 >= 4
        let g = mrw_autocov(0.5, 4.0, 6).unwrap();
        assert!(g[2] > 0.0);
        assert_eq!(&g[3..], &[0.0, 0.0, 0.0, 0.0]);
        // lambda = 0.33, R = 512, k = 7: 0.1089 * ln 64
        let g = mrw_autocov(0.33, 512.0, 7).unwrap();
        assert!((g[7] - 0.1089 * 64f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mrw_autocov_is_nonincreasing_and_nonnegative() {
        let g = mrw_autocov(0.8, 37.5, 60).unwrap();
        for k in 1..g.len() {
            assert!(g[k] <= g[k - 1]);
            assert!(g[k] >= 0.0);
        }
        // non-integer R: cutoff at the first k with k + 1 >= R
        assert!(g[36] > 0.0);
        assert_eq!(g[37], 0.0);
    }

    #[test]
    fn mrw_autocov_rejects_bad_parameters() {
        assert!(mrw_autocov(0.0, 100.0, 5).is_err());
        assert!(mrw_autocov(-0.3, 100.0, 5).is_err());
        assert!(mrw_autocov(0.5, 1.0, 5).is_err());
        assert!(mrw_autocov(0.5, 0.5, 5).is_err());
        assert!(mrw_autocov(f64::NAN, 100.0, 5).is_err());
    }

    #[test]
    fn durbin_levinson_white_noise() {
        let sol = durbin_levinson(&[1.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(sol.phi[0], vec![0.0]);
        assert_eq!(sol.phi[1], vec![0.0, 0.0]);
        assert_eq!(sol.innovation_variances, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn durbin_levinson_ar1_like_sequence() {
        // gamma = (1, 0.5, 0.25): phi^(2) = (0.5, 0), P_3 = 0.75
        let sol = durbin_levinson(&[1.0, 0.5, 0.25], 2).unwrap();
        assert!((sol.phi[1][0] - 0.5).abs() < 1e-15);
        assert!(sol.phi[1][1].abs() < 1e-15);
        assert!((sol.innovation_variances[2] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn durbin_levinson_rejects_non_positive_definite() {
        // Gamma_3 of (1, 0.9, 0.1) has a negative leading minor.
        let err = durbin_levinson(&[1.0, 0.9, 0.1], 2).unwrap_err();
        match err {
            Error::NotPositiveDefinite { .. } => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn durbin_levinson_variances_are_nonincreasing() {
        let gamma = mrw_autocov(0.4, 64.0, 30).unwrap();
        let sol = durbin_levinson(&gamma, 30).unwrap();
        let v = &sol.innovation_variances;
        for t in 1..v.len() {
            assert!(v[t] <= v[t - 1] + 1e-15);
            assert!(v[t] > 0.0);
        }
    }

    #[test]
    fn toeplitz_solve_identity_matrix() {
        let rhs = [3.0, -1.0, 2.0, 0.5];
        let y = toeplitz_solve(&[1.0, 0.0, 0.0, 0.0], &rhs).unwrap();
        for (a, b) in y.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn toeplitz_solve_two_by_two_hand_value() {
        // Gamma = [[1, 0.5], [0.5, 1]], rhs = (0.5, 0.25) -> y = (0.5, 0)
        let y = toeplitz_solve(&[1.0, 0.5], &[0.5, 0.25]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-15);
        assert!(y[1].abs() < 1e-15);
    }

    #[test]
    fn toeplitz_solve_residual_is_small() {
        let gamma = mrw_autocov(0.33, 512.0, 99).unwrap();
        let rhs: Vec<f64> = (0..100).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let y = toeplitz_solve(&gamma, &rhs).unwrap();
        // residual of the Toeplitz system, checked row by row
        for i in 0..100usize {
            let mut acc = 0.0;
            for j in 0..100usize {
                acc += gamma[i.abs_diff(j)] * y[j];
            }
            assert!(
                (acc - rhs[i]).abs() < 1e-8,
                "row {i}: residual {}",
                acc - rhs[i]
            );
        }
    }

    #[test]
    fn forecast_white_noise_has_zero_coefficients() {
        let gamma = vec![2.0; 1].into_iter().chain(vec![0.0; 20]).collect::<Vec<_>>();
        let (phi, var) = forecast_coefficients(&gamma, 10, 5).unwrap();
        assert!(phi.iter().all(|c| c.abs() < 1e-15));
        assert!((var - 2.0).abs() < 1e-15);
    }

    #[test]
    fn forecast_ar1_closed_form() {
        // AR(1): gamma(k) = psi^k / (1 - psi^2), psi = 0.9, T = 20, N = 5.
        // The predictor is psi^5 on the most recent value and zero elsewhere;
        // variance (1 - psi^10) / (1 - psi^2).
        let psi: f64 = 0.9;
        let denom = 1.0 - psi * psi;
        let gamma: Vec<f64> = (0..25).map(|k| psi.powi(k) / denom).collect();
        let (phi, var) = forecast_coefficients(&gamma, 20, 5).unwrap();
        assert!((phi[0] - psi.powi(5)).abs() < 1e-12);
        for c in &phi[1..] {
            assert!(c.abs() < 1e-12);
        }
        let want = (1.0 - psi.powi(10)) / denom;
        assert!((var - want).abs() < 1e-10 * want);
    }

    #[test]
    fn forecast_horizon_one_equals_durbin_levinson_exactly() {
        let gamma = mrw_autocov(0.33, 512.0, 50).unwrap();
        let (phi, var) = forecast_coefficients(&gamma, 50, 1).unwrap();
        let sol = durbin_levinson(&gamma, 50).unwrap();
        assert_eq!(phi, sol.phi[49]);
        assert_eq!(var, sol.innovation_variances[50]);
    }

    #[test]
    fn forecast_rejects_short_gamma_and_zero_horizon() {
        let gamma = mrw_autocov(0.33, 512.0, 10).unwrap();
        assert!(forecast_coefficients(&gamma, 10, 5).is_err());
        assert!(forecast_coefficients(&gamma, 5, 0).is_err());
    }
}
