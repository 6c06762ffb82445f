//! Discretized multifractal random walk.
//!
//! `x_t = sigma sqrt(c e^{h_t}) eps_t` where the latent field has the
//! log-decaying autocovariance `gamma(k) = lambda^2 ln^+ (R / (k+1))` and
//! `c = e^{-gamma(0)/2}` makes `E[c e^{h_t}] = 1`, so `sigma^2` is the
//! unconditional return variance. Likelihood work truncates the latent
//! conditionals to `tau` lags; the intermittency coefficient `lambda` and the
//! decorrelation scale `R` control volatility clustering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    log_squared_returns, sample_autocov, ForecastConditional, LatentModel, LatentPrior,
    ModelFamily, ModelParams, ParamSpec,
};
use crate::toeplitz::{forecast_coefficients, mrw_autocov};

/// Default truncation depth for the latent conditionals (effective depth is
/// `min(T - 1, tau)`).
pub const DEFAULT_TRUNCATION: usize = 100;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrwParams {
    /// Intermittency coefficient, strictly inside (0, sqrt 2).
    pub lambda: f64,
    /// Unconditional return scale, positive.
    pub sigma: f64,
    /// Decorrelation scale (in sample steps), real-valued, greater than 1.
    pub r: f64,
    /// Truncation depth of the latent conditionals, at least 1.
    pub tau: usize,
}

impl MrwParams {
    pub fn new(lambda: f64, sigma: f64, r: f64, tau: usize) -> Result<Self> {
        let p = MrwParams { lambda, sigma, r, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < SQRT_2) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: self.lambda,
                constraint: "must lie strictly inside (0, sqrt(2))",
            });
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                constraint: "must be positive and finite",
            });
        }
        if !(self.r > 1.0) || !self.r.is_finite() {
            return Err(Error::InvalidParameter {
                name: "r",
                value: self.r,
                constraint: "must be greater than 1 and finite",
            });
        }
        if self.tau == 0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: 0.0,
                constraint: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Latent variance `gamma(0) = lambda^2 ln R`.
    pub fn gamma0(&self) -> f64 {
        self.lambda * self.lambda * self.r.ln()
    }

    /// Lognormal normalization `c = e^{-gamma(0)/2}`, so that the stationary
    /// mean of `c e^{h_t}` is exactly 1.
    pub fn normalization(&self) -> f64 {
        (-0.5 * self.gamma0()).exp()
    }

    /// Latent autocovariance sequence for lags `0..=max_lag`.
    pub fn autocov(&self, max_lag: usize) -> Result<Vec<f64>> {
        mrw_autocov(self.lambda, self.r, max_lag)
    }
}

impl LatentModel for MrwParams {
    fn name(&self) -> &'static str {
        "mrw"
    }

    fn obs_variance_scale(&self) -> f64 {
        self.sigma * self.sigma * self.normalization()
    }

    fn latent_prior(&self, len: usize) -> Result<LatentPrior> {
        self.validate()?;
        if len == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let bandwidth = self.tau.min(len - 1);
        let gamma = self.autocov(bandwidth)?;
        LatentPrior::from_autocov(&gamma, len, self.tau)
    }

    fn forecast_conditional(&self, len: usize, horizon: usize) -> Result<ForecastConditional> {
        self.validate()?;
        if len == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let gamma = self.autocov(len + horizon - 1)?;
        let (coefficients, variance) = forecast_coefficients(&gamma, len, horizon)?;
        Ok(ForecastConditional {
            coefficients,
            variance,
        })
    }

    fn params(&self) -> ModelParams {
        ModelParams::Mrw(*self)
    }

    fn sample(&self, len: usize, seed: u64) -> Result<crate::simulate::SimulationOutput> {
        crate::simulate::sample_mrw(self, len, seed)
    }
}

/// Registry entry for the multifractal random walk family.
pub struct MrwFamily;

impl ModelFamily for MrwFamily {
    fn name(&self) -> &'static str {
        "mrw"
    }

    fn build(&self, spec: &ParamSpec) -> Result<Box<dyn LatentModel>> {
        let lambda = spec.require(spec.lambda, "lambda")?;
        let sigma = spec.require(spec.sigma, "sigma")?;
        let r = spec.require(spec.r, "r")?;
        let tau = spec.tau.unwrap_or(DEFAULT_TRUNCATION);
        Ok(Box::new(MrwParams::new(lambda, sigma, r, tau)?))
    }

    fn free_dim(&self) -> usize {
        3
    }

    fn from_unconstrained(&self, u: &[f64], tau: usize) -> Result<Box<dyn LatentModel>> {
        if u.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                actual: u.len(),
            });
        }
        let lambda = SQRT_2 / (1.0 + (-u[0]).exp());
        let sigma = u[1].exp();
        let r = 1.0 + u[2].exp();
        Ok(Box::new(MrwParams::new(lambda, sigma, r, tau)?))
    }

    fn initial_guess(&self, x: &[f64], tau: usize) -> Result<Vec<f64>> {
        if x.len() < 16 {
            return Err(Error::InsufficientData {
                needed: 16,
                got: x.len(),
            });
        }
        // y = ln x^2 = const + h + ln eps^2 inherits the latent
        // autocovariance at positive lags:
        //   Cov(y_t, y_{t+s}) = lambda^2 (ln R - ln(s+1)),
        // so a regression of the sample autocovariance on ln(s+1) gives
        // -lambda^2 as slope and lambda^2 ln R as intercept.
        let y = log_squared_returns(x);
        let smax = (x.len() / 8).clamp(2, 64);
        let pts: Vec<(f64, f64)> = (1..=smax)
            .map(|s| (((s + 1) as f64).ln(), sample_autocov(&y, s)))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
        let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let (lambda, r) = if slope.is_finite() && slope < -1e-6 {
            let lambda = (-slope).sqrt().clamp(0.05, 1.2);
            let ln_r = (intercept / (lambda * lambda)).clamp(2f64.ln(), (4.0 * x.len() as f64).ln());
            (lambda, ln_r.exp())
        } else {
            (0.3, (x.len() as f64).min(256.0))
        };
        let meansq = x.iter().map(|a| a * a).sum::<f64>() / x.len() as f64;
        let sigma = meansq.sqrt().max(f64::MIN_POSITIVE);
        let _ = tau; // truncation does not inform the moment start
        Ok(vec![
            logit(lambda / SQRT_2),
            sigma.ln(),
            (r - 1.0).ln(),
        ])
    }
}

fn logit(v: f64) -> f64 {
    (v / (1.0 - v)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::latent_conditional;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(MrwParams::new(0.0, 0.01, 512.0, 100).is_err());
        assert!(MrwParams::new(1.5, 0.01, 512.0, 100).is_err()); // above sqrt 2
        assert!(MrwParams::new(0.33, 0.0, 512.0, 100).is_err());
        assert!(MrwParams::new(0.33, 0.01, 1.0, 100).is_err());
        assert!(MrwParams::new(0.33, 0.01, 512.0, 0).is_err());
        assert!(MrwParams::new(0.33, 0.01, 512.0, 100).is_ok());
    }

    #[test]
    fn normalization_is_lognormal_mean_inverse() {
        let p = MrwParams::new(0.5, 1.0, 100.0, 100).unwrap();
        let gamma0 = 0.25 * 100f64.ln();
        assert!((p.gamma0() - gamma0).abs() < 1e-15);
        assert!((p.normalization() - (-0.5 * gamma0).exp()).abs() < 1e-15);
        assert!((p.obs_variance_scale() - p.normalization()).abs() < 1e-15);
    }

    #[test]
    fn normalization_makes_volatility_mean_one_monte_carlo() {
        // c E[e^h] = 1 for h ~ N(0, gamma(0))
        let p = MrwParams::new(0.33, 0.01, 512.0, 100).unwrap();
        let sd = p.gamma0().sqrt();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            acc += (sd * z).exp();
        }
        let mean = p.normalization() * acc / n as f64;
        assert!(
            (mean - 1.0).abs() < 0.01,
            "normalized volatility mean {mean} should be 1 within Monte Carlo error"
        );
    }

    #[test]
    fn first_conditional_is_unconditional_gaussian() {
        let p = MrwParams::new(0.33, 0.01, 512.0, 100).unwrap();
        let h = vec![0.3; 5];
        let (mean, var) = latent_conditional(&p, &h, 0).unwrap();
        assert_eq!(mean, 0.0);
        assert!((var - p.gamma0()).abs() < 1e-15);
    }

    #[test]
    fn unconstrained_coordinates_round_trip() {
        let u = [logit(0.33 / SQRT_2), 0.01f64.ln(), 511f64.ln()];
        let m = MrwFamily.from_unconstrained(&u, 100).unwrap();
        match m.params() {
            ModelParams::Mrw(p) => {
                assert!((p.lambda - 0.33).abs() < 1e-12);
                assert!((p.sigma - 0.01).abs() < 1e-12);
                assert!((p.r - 512.0).abs() < 1e-9);
                assert_eq!(p.tau, 100);
            }
            other => panic!("expected mrw params, got {other:?}"),
        }
    }

    #[test]
    fn build_requires_all_fields_and_defaults_tau() {
        let spec = ParamSpec {
            lambda: Some(0.33),
            sigma: Some(0.01),
            r: Some(512.0),
            ..ParamSpec::default()
        };
        let m = MrwFamily.build(&spec).unwrap();
        match m.params() {
            ModelParams::Mrw(p) => assert_eq!(p.tau, DEFAULT_TRUNCATION),
            other => panic!("expected mrw params, got {other:?}"),
        }
        let missing = ParamSpec {
            lambda: Some(0.33),
            ..ParamSpec::default()
        };
        assert!(MrwFamily.build(&missing).is_err());
    }
}
