//! Latent-volatility model layer.
//!
//! Both supported models describe returns as `x_t = sqrt(s^2 e^{h_t}) eps_t`
//! with iid standard normal `eps_t` and a stationary Gaussian latent field
//! `h`; they differ only in the law of `h` and in the constant `s^2`:
//!
//! * `sv`  -- AR(1) latent field, `s^2 = sigma^2`;
//! * `mrw` -- log-decaying autocovariance with lognormal normalization,
//!   `s^2 = sigma^2 c`.
//!
//! The shared structure is captured by [`LatentPrior`]: a factorization of
//! the latent density into Gaussian one-step conditionals whose coefficient
//! vectors reach back at most `bandwidth` steps. Everything downstream
//! (joint density, gradient, banded Hessian, posterior modes, likelihoods)
//! is written once against that structure; the [`LatentModel`] trait supplies
//! the model-specific pieces, and [`ModelFamily`] + [`FAMILIES`] form the
//! name-keyed registry the CLI and the fitter select variants from.

mod mrw;
mod sv;

pub use mrw::{MrwFamily, MrwParams, DEFAULT_TRUNCATION};
pub use sv::{SvFamily, SvParams};

use serde::{Deserialize, Serialize};

use crate::band::SymBandMatrix;
use crate::error::{Error, Result};
use crate::toeplitz::durbin_levinson;

/// A latent volatility path; plain storage, invariants enforced by the
/// operations that consume it.
pub type LatentField = Vec<f64>;

/// ln(2 pi), used by every Gaussian log density here.
pub(crate) const LN_2PI: f64 = 1.8378770664093453;

/// Truncated factorization of a stationary Gaussian latent density:
/// `p(h) = prod_t p(h_t | h_{t-1}, ..., h_{t-k_t})` with
/// `k_t = min(t - 1, bandwidth)`, each factor Gaussian with linear mean and
/// fixed variance. Stage-k coefficients and variances come from the
/// Durbin-Levinson recursion (or are closed-form for AR(1)).
#[derive(Debug, Clone)]
pub struct LatentPrior {
    len: usize,
    bandwidth: usize,
    /// `phi[k-1]` = stage-k predictor coefficients, k = 1..=bandwidth.
    phi: Vec<Vec<f64>>,
    /// `variances[k]` = innovation variance of the stage-k conditional,
    /// k = 0..=bandwidth (index 0 is the unconditional variance gamma(0)).
    variances: Vec<f64>,
}

impl LatentPrior {
    /// Build from an autocovariance sequence, truncating conditionals to at
    /// most `truncation` lags. Requires `gamma.len() > min(len-1, truncation)`.
    pub fn from_autocov(gamma: &[f64], len: usize, truncation: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let bandwidth = truncation.min(len - 1);
        let sol = durbin_levinson(gamma, bandwidth)?;
        Ok(LatentPrior {
            len,
            bandwidth,
            phi: sol.phi,
            variances: sol.innovation_variances,
        })
    }

    /// Closed-form AR(1) factorization: `h_1 ~ N(0, su^2 / (1 - psi^2))`,
    /// `h_t | h_{t-1} ~ N(psi h_{t-1}, su^2)`.
    pub fn ar1(psi: f64, sigma_u: f64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let su2 = sigma_u * sigma_u;
        let stationary = su2 / (1.0 - psi * psi);
        let bandwidth = 1usize.min(len - 1);
        let (phi, variances) = if bandwidth == 0 {
            (Vec::new(), vec![stationary])
        } else {
            (vec![vec![psi]], vec![stationary, su2])
        };
        Ok(LatentPrior {
            len,
            bandwidth,
            phi,
            variances,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Number of conditioning lags used at (0-based) position `i`.
    pub fn order_at(&self, i: usize) -> usize {
        i.min(self.bandwidth)
    }

    /// Predictor coefficients at position `i`, most recent lag first.
    pub fn coeff_at(&self, i: usize) -> &[f64] {
        let k = self.order_at(i);
        if k == 0 {
            &[]
        } else {
            &self.phi[k - 1]
        }
    }

    /// Innovation variance of the conditional at position `i`.
    pub fn variance_at(&self, i: usize) -> f64 {
        self.variances[self.order_at(i)]
    }

    /// Mean and variance of `p(h_i | h_{i-1}, ..., h_{i-k})` evaluated on a
    /// path; positions are 0-based.
    pub fn conditional(&self, h: &[f64], i: usize) -> (f64, f64) {
        let mean = self
            .coeff_at(i)
            .iter()
            .enumerate()
            .map(|(j, c)| c * h[i - 1 - j])
            .sum();
        (mean, self.variance_at(i))
    }

    /// Log density of the path under the truncated factorization.
    pub fn log_density(&self, h: &[f64]) -> f64 {
        debug_assert_eq!(h.len(), self.len);
        let mut acc = 0.0;
        for i in 0..self.len {
            let (mean, var) = self.conditional(h, i);
            let d = h[i] - mean;
            acc -= 0.5 * (LN_2PI + var.ln()) + d * d / (2.0 * var);
        }
        acc
    }

    /// Add the prior gradient `A h` into `out`. The log density is a centered
    /// quadratic, so its gradient is linear with the banded matrix `A` of
    /// [`Self::hessian`] and no constant term.
    pub fn add_gradient(&self, h: &[f64], out: &mut [f64]) {
        debug_assert_eq!(h.len(), self.len);
        debug_assert_eq!(out.len(), self.len);
        for i in 0..self.len {
            let (mean, var) = self.conditional(h, i);
            let r = (h[i] - mean) / var;
            out[i] -= r;
            for (j, c) in self.coeff_at(i).iter().enumerate() {
                out[i - 1 - j] += r * c;
            }
        }
    }

    /// The (constant) Hessian `A` of the log prior: a negative definite
    /// symmetric band matrix with bandwidth `min(len - 1, truncation)`.
    pub fn hessian(&self) -> SymBandMatrix {
        let mut a = SymBandMatrix::zeros(self.len, self.bandwidth);
        for i in 0..self.len {
            let coeff = self.coeff_at(i);
            let w = -1.0 / self.variance_at(i);
            // factor i contributes -(w_i w_i^T)/P_i with w_i supported on
            // positions i (value 1) and i-1-j (value -coeff[j])
            a.add_diag(i, w);
            for (j, cj) in coeff.iter().enumerate() {
                a.add(i, i - 1 - j, -cj * w);
                for (l, cl) in coeff.iter().enumerate().skip(j) {
                    let v = cj * cl * w;
                    if j == l {
                        a.add_diag(i - 1 - j, v);
                    } else {
                        a.add(i - 1 - j, i - 1 - l, v);
                    }
                }
            }
        }
        a
    }
}

/// Conditional law of the latent value `horizon` steps past a length-`len`
/// window: `h_{T+N} | h_T.. h_1 ~ N(sum_j coefficients[j] h_{T-j}, variance)`.
/// Coefficient order is most-recent-first and may be shorter than the window
/// (the AR(1) model needs only one coefficient).
#[derive(Debug, Clone)]
pub struct ForecastConditional {
    pub coefficients: Vec<f64>,
    pub variance: f64,
}

impl ForecastConditional {
    /// Apply the predictor to a window (natural time order, oldest first).
    pub fn mean(&self, h: &[f64]) -> f64 {
        let t = h.len();
        self.coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c * h[t - 1 - j])
            .sum()
    }
}

/// A latent-volatility model: everything the shared machinery needs to know.
pub trait LatentModel: Send + Sync {
    /// Registry name ("sv" or "mrw").
    fn name(&self) -> &'static str;

    /// Observation variance scale `s^2`, with `Var(x_t | h_t) = s^2 e^{h_t}`.
    fn obs_variance_scale(&self) -> f64;

    /// Truncated factorization of the latent density over a window of `len`.
    fn latent_prior(&self, len: usize) -> Result<LatentPrior>;

    /// Conditional law of `h_{len+horizon}` given the window.
    fn forecast_conditional(&self, len: usize, horizon: usize) -> Result<ForecastConditional>;

    /// Serializable parameter set.
    fn params(&self) -> ModelParams;

    /// Draw an exact path of length `len` from the model.
    fn sample(&self, len: usize, seed: u64) -> Result<crate::simulate::SimulationOutput>;
}

/// Joint density machinery for one (model, window length) pair. Building it
/// runs the Durbin-Levinson recursion and assembles the banded prior Hessian
/// once; evaluations after that are O(T * bandwidth).
#[derive(Debug, Clone)]
pub struct JointDensity {
    len: usize,
    s2: f64,
    prior: LatentPrior,
    a: SymBandMatrix,
}

impl JointDensity {
    pub fn new(model: &dyn LatentModel, len: usize) -> Result<Self> {
        let s2 = model.obs_variance_scale();
        if !(s2 > 0.0) || !s2.is_finite() {
            return Err(Error::InvalidParameter {
                name: "obs_variance_scale",
                value: s2,
                constraint: "must be positive and finite",
            });
        }
        let prior = model.latent_prior(len)?;
        let a = prior.hessian();
        Ok(JointDensity { len, s2, prior, a })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn obs_variance_scale(&self) -> f64 {
        self.s2
    }

    pub fn prior(&self) -> &LatentPrior {
        &self.prior
    }

    /// The banded prior Hessian `A` (gradient of the log prior is `A h`).
    pub fn a_matrix(&self) -> &SymBandMatrix {
        &self.a
    }

    fn check(&self, x: &[f64], h: &[f64]) -> Result<()> {
        if x.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                actual: x.len(),
            });
        }
        if h.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                actual: h.len(),
            });
        }
        Ok(())
    }

    /// `log p(x | h) = sum_t log N(x_t; 0, s^2 e^{h_t})`.
    pub fn log_obs(&self, x: &[f64], h: &[f64]) -> Result<f64> {
        self.check(x, h)?;
        let c = -0.5 * (LN_2PI + self.s2.ln());
        let mut acc = 0.0;
        for (xt, ht) in x.iter().zip(h.iter()) {
            acc += c - 0.5 * ht - xt * xt * (-ht).exp() / (2.0 * self.s2);
        }
        Ok(acc)
    }

    /// `log p(h)` under the truncated prior.
    pub fn log_prior(&self, h: &[f64]) -> Result<f64> {
        if h.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                actual: h.len(),
            });
        }
        Ok(self.prior.log_density(h))
    }

    /// Joint log density `log p(x, h) = log p(h) + log p(x | h)`.
    pub fn log_density(&self, x: &[f64], h: &[f64]) -> Result<f64> {
        Ok(self.log_prior(h)? + self.log_obs(x, h)?)
    }

    /// Gradient of the joint log density in `h`: `A h + g(x, h)` with
    /// `g_t = -1/2 + x_t^2 e^{-h_t} / (2 s^2)`.
    pub fn gradient(&self, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        self.check(x, h)?;
        let mut out = vec![0.0; self.len];
        self.prior.add_gradient(h, &mut out);
        for ((o, xt), ht) in out.iter_mut().zip(x.iter()).zip(h.iter()) {
            *o += -0.5 + xt * xt * (-ht).exp() / (2.0 * self.s2);
        }
        Ok(out)
    }

    /// Hessian of the joint log density in `h`:
    /// `Omega(x, h) = A + diag(-x_t^2 e^{-h_t} / (2 s^2))`, a symmetric band
    /// matrix that is negative definite everywhere.
    pub fn hessian(&self, x: &[f64], h: &[f64]) -> Result<SymBandMatrix> {
        self.check(x, h)?;
        let mut omega = self.a.clone();
        for (t, (xt, ht)) in x.iter().zip(h.iter()).enumerate() {
            omega.add_diag(t, -xt * xt * (-ht).exp() / (2.0 * self.s2));
        }
        Ok(omega)
    }
}

/// Joint log density `log p(x, h)` for a model (convenience wrapper that
/// builds the [`JointDensity`] for this one call).
pub fn joint_log_density(model: &dyn LatentModel, x: &[f64], h: &[f64]) -> Result<f64> {
    JointDensity::new(model, x.len())?.log_density(x, h)
}

/// Gradient of `log p(x, h)` in `h`.
pub fn gradient(model: &dyn LatentModel, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    JointDensity::new(model, x.len())?.gradient(x, h)
}

/// Hessian of `log p(x, h)` in `h` as a symmetric band matrix.
pub fn hessian(model: &dyn LatentModel, x: &[f64], h: &[f64]) -> Result<SymBandMatrix> {
    JointDensity::new(model, x.len())?.hessian(x, h)
}

/// Mean and variance of the truncated conditional `p(h_t | earlier)` at
/// 0-based position `t` of a path of length `h.len()`.
pub fn latent_conditional(model: &dyn LatentModel, h: &[f64], t: usize) -> Result<(f64, f64)> {
    if t >= h.len() {
        return Err(Error::InvalidInput(format!(
            "position {t} out of range for a path of length {}",
            h.len()
        )));
    }
    let prior = model.latent_prior(h.len())?;
    Ok(prior.conditional(h, t))
}

/// Serializable parameter set for either model, tagged by registry name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum ModelParams {
    #[serde(rename = "sv")]
    Sv(SvParams),
    #[serde(rename = "mrw")]
    Mrw(MrwParams),
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::Sv(_) => "sv",
            ModelParams::Mrw(_) => "mrw",
        }
    }

    /// Validate and box the parameter set as a usable model.
    pub fn build(&self) -> Result<Box<dyn LatentModel>> {
        match self {
            ModelParams::Sv(p) => Ok(Box::new(SvParams::new(p.psi, p.sigma_u, p.sigma)?)),
            ModelParams::Mrw(p) => {
                Ok(Box::new(MrwParams::new(p.lambda, p.sigma, p.r, p.tau)?))
            }
        }
    }
}

/// Bag of optional explicit parameter values, as collected from CLI flags or
/// a parameter file; each family picks out (and insists on) the fields it
/// needs.
#[derive(Debug, Clone, Default)]
pub struct ParamSpec {
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub tau: Option<usize>,
    pub psi: Option<f64>,
    pub sigma_u: Option<f64>,
}

impl ParamSpec {
    pub(crate) fn require(&self, field: Option<f64>, name: &'static str) -> Result<f64> {
        field.ok_or(Error::InvalidParameter {
            name,
            value: f64::NAN,
            constraint: "required for this model but not supplied",
        })
    }
}

/// A model family: builds parameterized instances and defines the coordinate
/// system the fitter optimizes in.
pub trait ModelFamily: Sync {
    /// Registry name, matched case-insensitively by [`family`].
    fn name(&self) -> &'static str;

    /// Build a model from explicit parameter values.
    fn build(&self, spec: &ParamSpec) -> Result<Box<dyn LatentModel>>;

    /// Dimension of the unconstrained parameter vector used by the fitter.
    fn free_dim(&self) -> usize;

    /// Map unconstrained optimizer coordinates to a model instance.
    fn from_unconstrained(&self, u: &[f64], tau: usize) -> Result<Box<dyn LatentModel>>;

    /// Moment-based starting point in unconstrained coordinates.
    fn initial_guess(&self, x: &[f64], tau: usize) -> Result<Vec<f64>>;
}

/// The model registry. Extend by adding a family here; the CLI and fitter
/// discover variants by name.
pub static FAMILIES: &[&dyn ModelFamily] = &[&SvFamily, &MrwFamily];

/// Look up a family by (case-insensitive) name.
pub fn family(name: &str) -> Result<&'static dyn ModelFamily> {
    FAMILIES
        .iter()
        .copied()
        .find(|f| f.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownModel(name.to_string()))
}

/// Sample variance with the 1/n convention (moment estimators here feed
/// starting points, not inference).
pub(crate) fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n
}

/// Log-squared returns with a relative floor so zero returns do not produce
/// -inf; shared by the families' moment-based starting points.
pub(crate) fn log_squared_returns(x: &[f64]) -> Vec<f64> {
    let meansq = x.iter().map(|a| a * a).sum::<f64>() / x.len() as f64;
    let floor = 1e-12 * meansq.max(f64::MIN_POSITIVE);
    x.iter().map(|a| (a * a).max(floor).ln()).collect()
}

/// Sample autocovariance of `v` at lag `s` (1/n convention, centered).
pub(crate) fn sample_autocov(v: &[f64], s: usize) -> f64 {
    let n = v.len();
    debug_assert!(s < n);
    let mean = v.iter().sum::<f64>() / n as f64;
    let mut acc = 0.0;
    for t in 0..n - s {
        acc += (v[t] - mean) * (v[t + s] - mean);
    }
    acc / n as f64
}
