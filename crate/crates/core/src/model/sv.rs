//! Basic stochastic-volatility model: AR(1) latent log-variance.
//!
//! `x_t = sigma e^{h_t / 2} eps_t` with `h_t = psi h_{t-1} + sigma_u u_t`
//! and stationary start `h_1 ~ N(0, sigma_u^2 / (1 - psi^2))`. The latent
//! field is centered, so no lognormal mean correction is applied
//! (`s^2 = sigma^2`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    log_squared_returns, sample_autocov, sample_variance, ForecastConditional, LatentModel,
    LatentPrior, ModelFamily, ModelParams, ParamSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvParams {
    /// AR(1) persistence, strictly inside (-1, 1).
    pub psi: f64,
    /// Innovation standard deviation of the latent field, positive.
    pub sigma_u: f64,
    /// Return scale, positive.
    pub sigma: f64,
}

impl SvParams {
    pub fn new(psi: f64, sigma_u: f64, sigma: f64) -> Result<Self> {
        let p = SvParams { psi, sigma_u, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.psi.abs() < 1.0) {
            return Err(Error::InvalidParameter {
                name: "psi",
                value: self.psi,
                constraint: "must lie strictly inside (-1, 1)",
            });
        }
        if !(self.sigma_u > 0.0) || !self.sigma_u.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma_u",
                value: self.sigma_u,
                constraint: "must be positive and finite",
            });
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                constraint: "must be positive and finite",
            });
        }
        Ok(())
    }
}

impl LatentModel for SvParams {
    fn name(&self) -> &'static str {
        "sv"
    }

    fn obs_variance_scale(&self) -> f64 {
        self.sigma * self.sigma
    }

    fn latent_prior(&self, len: usize) -> Result<LatentPrior> {
        self.validate()?;
        LatentPrior::ar1(self.psi, self.sigma_u, len)
    }

    fn forecast_conditional(&self, len: usize, horizon: usize) -> Result<ForecastConditional> {
        self.validate()?;
        if len == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: 0.0,
                constraint: "must be at least 1",
            });
        }
        // h_{T+N} | h_T ~ N(psi^N h_T, sigma_u^2 sum_{k<N} psi^{2k})
        let psi_n = self.psi.powi(horizon as i32);
        let su2 = self.sigma_u * self.sigma_u;
        let psi2 = self.psi * self.psi;
        let variance = su2 * (1.0 - psi2.powi(horizon as i32)) / (1.0 - psi2);
        Ok(ForecastConditional {
            coefficients: vec![psi_n],
            variance,
        })
    }

    fn params(&self) -> ModelParams {
        ModelParams::Sv(*self)
    }

    fn sample(&self, len: usize, seed: u64) -> Result<crate::simulate::SimulationOutput> {
        crate::simulate::sample_sv(self, len, seed)
    }
}

/// Registry entry for the stochastic-volatility family.
pub struct SvFamily;

impl ModelFamily for SvFamily {
    fn name(&self) -> &'static str {
        "sv"
    }

    fn build(&self, spec: &ParamSpec) -> Result<Box<dyn LatentModel>> {
        let psi = spec.require(spec.psi, "psi")?;
        let sigma_u = spec.require(spec.sigma_u, "sigma_u")?;
        let sigma = spec.require(spec.sigma, "sigma")?;
        Ok(Box::new(SvParams::new(psi, sigma_u, sigma)?))
    }

    fn free_dim(&self) -> usize {
        3
    }

    fn from_unconstrained(&self, u: &[f64], _tau: usize) -> Result<Box<dyn LatentModel>> {
        if u.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                actual: u.len(),
            });
        }
        Ok(Box::new(SvParams::new(u[0].tanh(), u[1].exp(), u[2].exp())?))
    }

    fn initial_guess(&self, x: &[f64], _tau: usize) -> Result<Vec<f64>> {
        if x.len() < 4 {
            return Err(Error::InsufficientData {
                needed: 4,
                got: x.len(),
            });
        }
        // Moments of y = ln x^2 = ln sigma^2 + h + ln eps^2:
        //   Var(y) = Var(h) + pi^2/2,  Cov(y_t, y_{t+1}) = psi Var(h).
        let y = log_squared_returns(x);
        let var_y = sample_variance(&y);
        let var_noise = std::f64::consts::PI * std::f64::consts::PI / 2.0;
        let var_h = (var_y - var_noise).max(0.01);
        let mut psi = sample_autocov(&y, 1) / var_h;
        if !psi.is_finite() {
            psi = 0.9;
        }
        psi = psi.clamp(-0.985, 0.985);
        let sigma_u = (var_h * (1.0 - psi * psi)).sqrt();
        let meansq = x.iter().map(|a| a * a).sum::<f64>() / x.len() as f64;
        let sigma = (meansq / (var_h / 2.0).exp()).sqrt().max(f64::MIN_POSITIVE);
        Ok(vec![atanh(psi), sigma_u.ln(), sigma.ln()])
    }
}

fn atanh(v: f64) -> f64 {
    0.5 * ((1.0 + v) / (1.0 - v)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{joint_log_density, LN_2PI};

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(SvParams::new(1.0, 0.2, 0.01).is_err());
        assert!(SvParams::new(-1.2, 0.2, 0.01).is_err());
        assert!(SvParams::new(0.9, 0.0, 0.01).is_err());
        assert!(SvParams::new(0.9, -0.1, 0.01).is_err());
        assert!(SvParams::new(0.9, 0.2, 0.0).is_err());
        assert!(SvParams::new(f64::NAN, 0.2, 0.01).is_err());
        assert!(SvParams::new(0.9, 0.2, 0.01).is_ok());
    }

    #[test]
    fn single_point_joint_density_is_two_standard_normals() {
        // psi = 0, sigma_u = 1, sigma = 1, x = h = 0:
        // log N(0;0,1) + log N(0;0,1) = -ln(2 pi)
        let m = SvParams::new(0.0, 1.0, 1.0).unwrap();
        let v = joint_log_density(&m, &[0.0], &[0.0]).unwrap();
        assert!((v - (-LN_2PI)).abs() < 1e-12);
        assert!((v - (-1.837877)).abs() < 1e-6);
    }

    #[test]
    fn prior_hessian_has_ar1_band_entries() {
        let psi = 0.7;
        let su = 0.5;
        let m = SvParams::new(psi, su, 0.01).unwrap();
        let a = m.latent_prior(6).unwrap().hessian();
        let su2 = su * su;
        for i in 1..5 {
            assert!((a.get(i, i) - (-(1.0 + psi * psi) / su2)).abs() < 1e-12);
        }
        for i in 0..5 {
            assert!((a.get(i, i + 1) - psi / su2).abs() < 1e-12);
        }
        // boundary rows see only one neighbor
        assert!((a.get(0, 0) - (-1.0 / su2)).abs() < 1e-12);
        assert!((a.get(5, 5) - (-1.0 / su2)).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_when_returns_sit_at_local_scale() {
        // with h = 0 and x_t^2 = s^2 the observation score is zero and the
        // prior score of the zero path is zero
        let m = SvParams::new(0.6, 0.3, 0.02).unwrap();
        let x = vec![0.02; 8];
        let h = vec![0.0; 8];
        let g = crate::model::gradient(&m, &x, &h).unwrap();
        for v in g {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn forecast_conditional_closed_form() {
        let m = SvParams::new(0.9, 0.2, 0.01).unwrap();
        let fc = m.forecast_conditional(50, 3).unwrap();
        assert_eq!(fc.coefficients.len(), 1);
        assert!((fc.coefficients[0] - 0.9f64.powi(3)).abs() < 1e-15);
        let want = 0.04 * (1.0 + 0.81 + 0.81 * 0.81);
        assert!((fc.variance - want).abs() < 1e-12);
        // applying it to a window reads the last value
        let h: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        assert!((fc.mean(&h) - 0.9f64.powi(3) * 4.9).abs() < 1e-12);
    }

    #[test]
    fn unconstrained_coordinates_round_trip() {
        let u = [atanh(0.95), 0.2f64.ln(), 0.01f64.ln()];
        let m = SvFamily.from_unconstrained(&u, 100).unwrap();
        match m.params() {
            ModelParams::Sv(p) => {
                assert!((p.psi - 0.95).abs() < 1e-12);
                assert!((p.sigma_u - 0.2).abs() < 1e-12);
                assert!((p.sigma - 0.01).abs() < 1e-12);
            }
            other => panic!("expected sv params, got {other:?}"),
        }
    }

    #[test]
    fn initial_guess_lands_in_a_sane_region() {
        // returns with mild clustering; the guess only has to be finite and
        // inside the admissible region
        let x: Vec<f64> = (0..256)
            .map(|i| 0.01 * (1.0 + 0.5 * ((i / 16) % 2) as f64) * (((i * 19) % 7) as f64 - 3.0) / 3.0)
            .collect();
        let u = SvFamily.initial_guess(&x, 100).unwrap();
        let m = SvFamily.from_unconstrained(&u, 100).unwrap();
        assert_eq!(m.name(), "sv");
    }
}
