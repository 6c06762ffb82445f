//! Model fitting, latent-state estimation, forecasting, and conditional
//! return densities.
//!
//! Fitting maximizes the Laplace-approximated likelihood with a Nelder-Mead
//! search in unconstrained coordinates (each family defines its own
//! transform), warm-starting every mode search from the previous one.
//! Latent-state estimates are joint posterior modes; forecasts push the
//! latent predictor through the model's conditional law; the conditional
//! density of a future return is a ratio of two Laplace approximations, one
//! on the observed window and one on the window augmented with the future
//! point.

use std::cell::{Cell, RefCell};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::{
    find_mode_prepared, laplace_log_likelihood_prepared, GRADIENT_TOL_SCALE, MAX_ITERATIONS,
};
use crate::model::{JointDensity, LatentModel, ModelFamily, ModelParams, LN_2PI};
use crate::optim::{minimize, NelderMead};
use crate::series::ReturnSeries;

/// Fewest observations accepted by the fitter.
pub const MIN_FIT_LEN: usize = 20;

/// Unconstrained coordinates beyond this magnitude flag a boundary fit.
const BOUNDARY_LIMIT: f64 = 16.0;

/// Options controlling the maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Prior truncation depth (used by the mrw family; sv ignores it).
    pub tau: usize,
    /// Optimizer restarts after the first run, each perturbed around the best
    /// point so far.
    pub restarts: usize,
    /// Likelihood-evaluation budget per optimizer run.
    pub max_evals: usize,
    /// Seed for the restart perturbations.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tau: crate::model::DEFAULT_TRUNCATION,
            restarts: 2,
            max_evals: 400,
            seed: 0x5EED,
        }
    }
}

/// One point of the optimization trace: a new best likelihood and the
/// evaluation count when it was reached.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub evaluations: usize,
    pub log_likelihood: f64,
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// Fitted parameters, tagged with the model name.
    pub params: ModelParams,
    /// Laplace log likelihood at the fitted parameters.
    pub log_likelihood: f64,
    /// Improvement trace (new bests only).
    pub trace: Vec<TraceEntry>,
    /// Whether the winning optimizer run met its internal tolerances.
    pub converged: bool,
    /// True when the fit ran into the edge of the admissible region (an
    /// unconstrained coordinate of very large magnitude); estimates on the
    /// boundary should be treated with suspicion.
    pub boundary: bool,
    /// Total likelihood evaluations across all runs.
    pub evaluations: usize,
}

/// Fit a model family to a return series by maximizing the Laplace
/// likelihood.
pub fn fit_ml(
    family: &dyn ModelFamily,
    series: &ReturnSeries,
    options: &FitOptions,
) -> Result<FitResult> {
    let x = series.values();
    if x.len() < MIN_FIT_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_LEN,
            got: x.len(),
        });
    }
    let tau = options.tau;

    let warm: RefCell<Option<Vec<f64>>> = RefCell::new(None);
    let trace: RefCell<Vec<TraceEntry>> = RefCell::new(Vec::new());
    let evals = Cell::new(0usize);
    let best_seen = Cell::new(f64::INFINITY);

    let mut objective = |u: &[f64]| -> f64 {
        evals.set(evals.get() + 1);
        let model = match family.from_unconstrained(u, tau) {
            Ok(m) => m,
            Err(_) => return f64::INFINITY,
        };
        let joint = match JointDensity::new(model.as_ref(), x.len()) {
            Ok(j) => j,
            Err(_) => return f64::INFINITY,
        };
        let init = warm.borrow().clone();
        match laplace_log_likelihood_prepared(&joint, x, init.as_deref()) {
            Ok((ll, mode)) => {
                *warm.borrow_mut() = Some(mode);
                let nll = -ll;
                if nll < best_seen.get() {
                    best_seen.set(nll);
                    trace.borrow_mut().push(TraceEntry {
                        evaluations: evals.get(),
                        log_likelihood: ll,
                    });
                }
                nll
            }
            Err(_) => f64::INFINITY,
        }
    };

    let u0 = family.initial_guess(x, tau)?;
    let nm = NelderMead {
        max_evals: options.max_evals,
        ..NelderMead::default()
    };
    let mut best = minimize(&mut objective, &u0, &nm);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..options.restarts {
        let perturbed: Vec<f64> = best
            .x
            .iter()
            .map(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v + 0.25 * z
            })
            .collect();
        let run = minimize(&mut objective, &perturbed, &nm);
        if run.f < best.f {
            best = run;
        }
    }

    if !best.f.is_finite() {
        return Err(Error::OptimizationFailed(
            "no parameter vector produced a finite likelihood".to_string(),
        ));
    }
    let boundary = best.x.iter().any(|v| v.abs() > BOUNDARY_LIMIT);
    let model = family.from_unconstrained(&best.x, tau)?;
    Ok(FitResult {
        params: model.params(),
        log_likelihood: -best.f,
        trace: trace.into_inner(),
        converged: best.converged,
        boundary,
        evaluations: evals.get(),
    })
}

/// What a [`LatentEstimate`] contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    /// Joint posterior mode of the whole window given all of it.
    Smoothed,
    /// Posterior mode of the final latent value given the window up to it.
    Filtered,
    /// Point forecast of a latent value past the window.
    Forecast,
}

/// A latent-state estimate (smoothed path, filtered endpoint, or forecast).
#[derive(Debug, Clone, Serialize)]
pub struct LatentEstimate {
    pub kind: EstimateKind,
    /// Steps past the window for forecasts; 0 otherwise.
    pub horizon: usize,
    pub values: Vec<f64>,
    /// Conditional forecast variance, when the estimate is a forecast.
    pub variance: Option<f64>,
}

/// Smoothed latent path: the joint posterior mode of `h_{1:T}` given the
/// whole series.
pub fn smooth(model: &dyn LatentModel, series: &ReturnSeries) -> Result<LatentEstimate> {
    let x = series.values();
    let joint = JointDensity::new(model, x.len())?;
    let mode = find_mode_prepared(&joint, x, None)?;
    Ok(LatentEstimate {
        kind: EstimateKind::Smoothed,
        horizon: 0,
        values: mode.h_star,
        variance: None,
    })
}

/// Filtered estimate of the final latent value: the last component of the
/// smoothed path over the window ending there (for the final time point the
/// two conditioning sets coincide, so this delegates to [`smooth`]).
pub fn filter(model: &dyn LatentModel, series: &ReturnSeries) -> Result<LatentEstimate> {
    let smoothed = smooth(model, series)?;
    let last = *smoothed
        .values
        .last()
        .expect("smooth never returns an empty path");
    Ok(LatentEstimate {
        kind: EstimateKind::Filtered,
        horizon: 0,
        values: vec![last],
        variance: None,
    })
}

/// Filtered trajectory: for every `t` in `start..=T`, the final component of
/// the posterior mode over the prefix `x_{1:t}`. Each prefix mode warm-starts
/// the next, but every value equals the cold-start answer for that prefix.
pub fn filter_sequence(
    model: &dyn LatentModel,
    series: &ReturnSeries,
    start: usize,
) -> Result<Vec<f64>> {
    let x = series.values();
    if start == 0 || start > x.len() {
        return Err(Error::InvalidInput(format!(
            "start {start} must lie in 1..={}",
            x.len()
        )));
    }
    let mut out = Vec::with_capacity(x.len() - start + 1);
    let mut warm: Option<Vec<f64>> = None;
    for t in start..=x.len() {
        let joint = JointDensity::new(model, t)?;
        let mode = find_mode_prepared(&joint, &x[..t], warm.as_deref())?;
        let last = *mode.h_star.last().unwrap();
        out.push(last);
        let mut next = mode.h_star;
        next.push(last); // flat extension as the next warm start
        warm = Some(next);
    }
    Ok(out)
}

/// Point forecast of `h_{T+horizon}`: the model's conditional-mean predictor
/// applied to the smoothed path, with the conditional variance alongside.
pub fn forecast_latent(
    model: &dyn LatentModel,
    series: &ReturnSeries,
    horizon: usize,
) -> Result<LatentEstimate> {
    let smoothed = smooth(model, series)?;
    forecast_from_smoothed(model, &smoothed.values, horizon)
}

/// Forecasts for all horizons `1..=max_horizon`, sharing one smoothing pass.
pub fn forecast_path(
    model: &dyn LatentModel,
    series: &ReturnSeries,
    max_horizon: usize,
) -> Result<Vec<LatentEstimate>> {
    if max_horizon == 0 {
        return Err(Error::InvalidInput(
            "maximum forecast horizon must be at least 1".to_string(),
        ));
    }
    let smoothed = smooth(model, series)?;
    (1..=max_horizon)
        .map(|n| forecast_from_smoothed(model, &smoothed.values, n))
        .collect()
}

fn forecast_from_smoothed(
    model: &dyn LatentModel,
    smoothed: &[f64],
    horizon: usize,
) -> Result<LatentEstimate> {
    if horizon == 0 {
        return Err(Error::InvalidInput(
            "forecast horizon must be at least 1".to_string(),
        ));
    }
    let fc = model.forecast_conditional(smoothed.len(), horizon)?;
    Ok(LatentEstimate {
        kind: EstimateKind::Forecast,
        horizon,
        values: vec![fc.mean(smoothed)],
        variance: Some(fc.variance),
    })
}

/// Evaluation grid for [`conditional_return_density`].
#[derive(Debug, Clone)]
pub enum GridSpec {
    /// Symmetric grid of `points` values spanning `span_stds` sample standard
    /// deviations either side of zero (odd `points` puts a node exactly at
    /// zero).
    Auto { points: usize, span_stds: f64 },
    /// Caller-supplied strictly increasing grid.
    Explicit(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            points: 257,
            span_stds: 8.0,
        }
    }
}

/// A conditional return density evaluated on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    /// Renormalized density values (trapezoid integral over the grid is 1).
    pub density: Vec<f64>,
    /// Trapezoid integral of the raw (pre-renormalization) density ratio; a
    /// value far from 1 means the grid misses probability mass and should be
    /// widened or refined.
    pub normalization: f64,
}

/// Conditional density of the return `horizon` steps past the window, given
/// the observed series.
///
/// Each grid value `xi` costs one Laplace approximation of the joint density
/// of `(x, xi)`; the curve is the ratio to the Laplace likelihood of `x`
/// alone. Points are independent, so the grid is evaluated in parallel.
pub fn conditional_return_density(
    model: &dyn LatentModel,
    series: &ReturnSeries,
    horizon: usize,
    grid: &GridSpec,
) -> Result<DensityCurve> {
    let x = series.values();
    if horizon == 0 {
        return Err(Error::InvalidInput(
            "density horizon must be at least 1".to_string(),
        ));
    }
    let joint = JointDensity::new(model, x.len())?;
    let (base_ll, base_mode) = laplace_log_likelihood_prepared(&joint, x, None)?;
    let fc = model.forecast_conditional(x.len(), horizon)?;
    if !(fc.variance > 0.0) || !fc.variance.is_finite() {
        return Err(Error::InvalidParameter {
            name: "forecast_variance",
            value: fc.variance,
            constraint: "must be positive and finite",
        });
    }
    let mut wbar = vec![0.0; x.len()];
    for (j, c) in fc.coefficients.iter().enumerate() {
        wbar[x.len() - 1 - j] = *c;
    }
    let border = Border {
        wbar,
        pf: fc.variance,
        s2: joint.obs_variance_scale(),
    };
    let hf0 = fc.mean(&base_mode);

    let grid_points = build_grid(grid, x)?;
    let log_ratio: Vec<f64> = grid_points
        .par_iter()
        .map(|&xi| augmented_laplace(&joint, x, &border, xi, &base_mode, hf0).map(|l| l - base_ll))
        .collect::<Result<Vec<f64>>>()?;

    // trapezoid integral of the raw curve, computed around its peak
    let peak = log_ratio.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::InvalidInput(
            "density is zero everywhere on the grid".to_string(),
        ));
    }
    let scaled: Vec<f64> = log_ratio.iter().map(|l| (l - peak).exp()).collect();
    let mut integral = 0.0;
    for i in 1..grid_points.len() {
        integral += 0.5 * (scaled[i] + scaled[i - 1]) * (grid_points[i] - grid_points[i - 1]);
    }
    let normalization = integral * peak.exp();
    if !(normalization > 0.0) || !normalization.is_finite() {
        return Err(Error::InvalidInput(format!(
            "density normalization is degenerate ({normalization})"
        )));
    }
    let density: Vec<f64> = log_ratio
        .iter()
        .map(|l| l.exp() / normalization)
        .collect();
    Ok(DensityCurve {
        grid: grid_points,
        density,
        normalization,
    })
}

fn build_grid(spec: &GridSpec, x: &[f64]) -> Result<Vec<f64>> {
    match spec {
        GridSpec::Auto { points, span_stds } => {
            let n = *points;
            if n < 3 {
                return Err(Error::InvalidInput(
                    "density grid needs at least 3 points".to_string(),
                ));
            }
            if !(*span_stds > 0.0) || !span_stds.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "span_stds",
                    value: *span_stds,
                    constraint: "must be positive and finite",
                });
            }
            let meansq = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
            let sd = meansq.sqrt();
            if !(sd > 0.0) {
                return Err(Error::InvalidInput(
                    "cannot build an automatic grid around an all-zero series".to_string(),
                ));
            }
            let half = span_stds * sd;
            let grid = if n % 2 == 1 {
                let m = (n / 2) as f64;
                (0..n)
                    .map(|i| half * ((i as f64) - m) / m)
                    .collect::<Vec<f64>>()
            } else {
                let step = 2.0 * half / (n as f64 - 1.0);
                (0..n).map(|i| -half + step * i as f64).collect()
            };
            Ok(grid)
        }
        GridSpec::Explicit(v) => {
            if v.len() < 3 {
                return Err(Error::InvalidInput(
                    "density grid needs at least 3 points".to_string(),
                ));
            }
            if v.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidInput(
                    "density grid contains a non-finite value".to_string(),
                ));
            }
            for w in v.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::InvalidInput(
                        "density grid must be strictly increasing".to_string(),
                    ));
                }
            }
            Ok(v.clone())
        }
    }
}

/// The pieces that border the observed-window curvature when the future
/// return is appended: predictor weights scattered over the window, the
/// conditional latent variance, and the observation variance scale.
struct Border {
    wbar: Vec<f64>,
    pf: f64,
    s2: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Augmented joint log density
/// `log p(x, h) + log N(hf; wbar . h, pf) + log N(xi; 0, s2 e^{hf})`.
fn aug_log_density(
    joint: &JointDensity,
    x: &[f64],
    border: &Border,
    xi: f64,
    h: &[f64],
    hf: f64,
) -> Result<f64> {
    let base = joint.log_density(x, h)?;
    let d = hf - dot(&border.wbar, h);
    let latent = -0.5 * (LN_2PI + border.pf.ln()) - d * d / (2.0 * border.pf);
    let obs =
        -0.5 * (LN_2PI + border.s2.ln() + hf) - xi * xi * (-hf).exp() / (2.0 * border.s2);
    Ok(base + latent + obs)
}

/// Gradient of the augmented density in `(h, hf)`.
fn aug_gradient(
    joint: &JointDensity,
    x: &[f64],
    border: &Border,
    xi: f64,
    h: &[f64],
    hf: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut gh = joint.gradient(x, h)?;
    let rf = (hf - dot(&border.wbar, h)) / border.pf;
    for (g, w) in gh.iter_mut().zip(border.wbar.iter()) {
        *g += rf * w;
    }
    let gf = -rf - 0.5 + xi * xi * (-hf).exp() / (2.0 * border.s2);
    Ok((gh, gf))
}

/// One Laplace approximation of the augmented density: Newton in `(h, hf)`
/// with the bordered curvature solved by a Sherman-Morrison update plus a
/// scalar Schur complement, so every step stays O(T * bandwidth^2).
fn augmented_laplace(
    joint: &JointDensity,
    x: &[f64],
    border: &Border,
    xi: f64,
    h_init: &[f64],
    hf_init: f64,
) -> Result<f64> {
    let t_len = joint.len();
    let tol = GRADIENT_TOL_SCALE * ((t_len + 1) as f64).sqrt();

    let mut h = h_init.to_vec();
    let mut hf = hf_init;
    let mut f = aug_log_density(joint, x, border, xi, &h, hf)?;
    if !f.is_finite() {
        h = vec![0.0; t_len];
        hf = 0.0;
        f = aug_log_density(joint, x, border, xi, &h, hf)?;
        if !f.is_finite() {
            return Err(Error::InvalidInput(
                "augmented log density is not finite at the zero path".to_string(),
            ));
        }
    }

    let mut iterations = 0;
    loop {
        let (gh, gf) = aug_gradient(joint, x, border, xi, &h, hf)?;
        let grad_norm = (dot(&gh, &gh) + gf * gf).sqrt();
        if grad_norm <= tol {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::ModeSearchFailed {
                iterations,
                grad_norm,
            });
        }
        iterations += 1;

        // bordered Newton direction: solve (S + wbar wbar^T / pf) and close
        // with the scalar Schur complement of the hf row
        let chol = joint.hessian(x, &h)?.negated().cholesky()?;
        let a = chol.solve(&border.wbar);
        let kappa = dot(&border.wbar, &a);
        let denom = border.pf + kappa;
        let t1 = chol.solve(&gh);
        let shift = dot(&border.wbar, &t1) / denom;
        let m1: Vec<f64> = t1.iter().zip(a.iter()).map(|(t, av)| t - av * shift).collect();
        let schur = 1.0 / denom + xi * xi * (-hf).exp() / (2.0 * border.s2);
        let c_m1 = -dot(&border.wbar, &m1) / border.pf;
        let df = (gf - c_m1) / schur;
        let dh: Vec<f64> = m1
            .iter()
            .zip(a.iter())
            .map(|(m, av)| m + av * df / denom)
            .collect();

        let (dir_h, dir_f, slope) = {
            let s = dot(&gh, &dh) + gf * df;
            if s > 0.0 {
                (dh, df, s)
            } else {
                (gh.clone(), gf, grad_norm * grad_norm)
            }
        };

        // backtracking line search (strict improvement, as in the base mode
        // search)
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand_h: Vec<f64> = h
                .iter()
                .zip(dir_h.iter())
                .map(|(v, d)| v + alpha * d)
                .collect();
            let cand_f = hf + alpha * dir_f;
            if let Ok(fc) = aug_log_density(joint, x, border, xi, &cand_h, cand_f) {
                if fc.is_finite() && fc > f && fc - f >= 1e-4 * alpha * slope {
                    h = cand_h;
                    hf = cand_f;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            // objective at its floating-point floor: accept the full step if
            // it strictly shrinks the gradient
            let cand_h: Vec<f64> = h.iter().zip(dir_h.iter()).map(|(v, d)| v + d).collect();
            let cand_f = hf + dir_f;
            let fc = aug_log_density(joint, x, border, xi, &cand_h, cand_f)?;
            if fc.is_finite() {
                let (gch, gcf) = aug_gradient(joint, x, border, xi, &cand_h, cand_f)?;
                if (dot(&gch, &gch) + gcf * gcf).sqrt() < grad_norm {
                    h = cand_h;
                    hf = cand_f;
                    f = fc;
                    accepted = true;
                }
            }
        }
        if !accepted {
            return Err(Error::ModeSearchFailed {
                iterations,
                grad_norm,
            });
        }
    }

    // Laplace value at the mode; the augmented log determinant splits into
    // the banded factor, the rank-one update, and the Schur scalar
    let chol = joint.hessian(x, &h)?.negated().cholesky()?;
    let a = chol.solve(&border.wbar);
    let kappa = dot(&border.wbar, &a);
    let schur = 1.0 / (border.pf + kappa) + xi * xi * (-hf).exp() / (2.0 * border.s2);
    let log_det =
        chol.log_det() + (1.0 + kappa / border.pf).ln() + schur.ln();
    Ok(0.5 * (t_len as f64 + 1.0) * LN_2PI - 0.5 * log_det + f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{family, SvParams};
    use crate::simulate::sample_sv;

    fn sv_series(len: usize, seed: u64) -> ReturnSeries {
        let p = SvParams::new(0.9, 0.35, 0.01).unwrap();
        ReturnSeries::new(sample_sv(&p, len, seed).unwrap().returns).unwrap()
    }

    #[test]
    fn fit_rejects_short_series() {
        let s = ReturnSeries::new(vec![0.01; 10]).unwrap();
        let err = fit_ml(family("sv").unwrap(), &s, &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { .. }));
    }

    #[test]
    fn sv_fit_produces_a_sane_interior_estimate() {
        let s = sv_series(600, 21);
        let fit = fit_ml(family("sv").unwrap(), &s, &FitOptions::default()).unwrap();
        assert!(!fit.boundary);
        assert!(fit.log_likelihood.is_finite());
        match fit.params {
            ModelParams::Sv(p) => {
                assert!(p.psi > 0.4 && p.psi < 0.999, "psi = {}", p.psi);
                assert!(p.sigma > 0.001 && p.sigma < 0.1, "sigma = {}", p.sigma);
            }
            other => panic!("unexpected family: {other:?}"),
        }
        // trace is monotone in likelihood
        for w in fit.trace.windows(2) {
            assert!(w[1].log_likelihood >= w[0].log_likelihood);
        }
    }

    #[test]
    fn smooth_matches_window_length_and_filter_is_its_endpoint() {
        let s = sv_series(80, 4);
        let model = SvParams::new(0.9, 0.35, 0.01).unwrap();
        let sm = smooth(&model, &s).unwrap();
        assert_eq!(sm.values.len(), 80);
        assert_eq!(sm.kind, EstimateKind::Smoothed);
        let fl = filter(&model, &s).unwrap();
        assert_eq!(fl.values.len(), 1);
        assert_eq!(fl.values[0], *sm.values.last().unwrap());
    }

    #[test]
    fn filter_sequence_matches_independent_prefix_modes() {
        let s = sv_series(40, 9);
        let model = SvParams::new(0.85, 0.4, 0.012).unwrap();
        let seq = filter_sequence(&model, &s, 30).unwrap();
        assert_eq!(seq.len(), 11);
        for (i, t) in (30..=40).enumerate() {
            let prefix = ReturnSeries::new(s.values()[..t].to_vec()).unwrap();
            let direct = filter(&model, &prefix).unwrap();
            assert!(
                (seq[i] - direct.values[0]).abs() < 1e-6,
                "prefix {t}: {} vs {}",
                seq[i],
                direct.values[0]
            );
        }
    }

    #[test]
    fn sv_forecast_decays_the_filtered_value_geometrically() {
        let s = sv_series(120, 13);
        let model = SvParams::new(0.9, 0.35, 0.01).unwrap();
        let last = filter(&model, &s).unwrap().values[0];
        for n in [1usize, 3, 10] {
            let fc = forecast_latent(&model, &s, n).unwrap();
            let want = 0.9f64.powi(n as i32) * last;
            assert!(
                (fc.values[0] - want).abs() < 1e-10,
                "horizon {n}: {} vs {want}",
                fc.values[0]
            );
            let var = fc.variance.unwrap();
            let want_var = 0.35f64.powi(2) * (1.0 - 0.9f64.powi(2 * n as i32))
                / (1.0 - 0.81);
            assert!((var - want_var).abs() < 1e-12);
        }
        let path = forecast_path(&model, &s, 5).unwrap();
        assert_eq!(path.len(), 5);
        assert!(path[4].variance.unwrap() > path[0].variance.unwrap());
    }

    #[test]
    fn forecast_requires_a_positive_horizon() {
        let s = sv_series(50, 2);
        let model = SvParams::new(0.9, 0.3, 0.01).unwrap();
        assert!(forecast_latent(&model, &s, 0).is_err());
        assert!(conditional_return_density(&model, &s, 0, &GridSpec::default()).is_err());
    }

    #[test]
    fn density_is_normalized_positive_and_even() {
        let s = sv_series(60, 17);
        let model = SvParams::new(0.9, 0.35, 0.01).unwrap();
        let grid = GridSpec::Auto {
            points: 65,
            span_stds: 8.0,
        };
        let curve = conditional_return_density(&model, &s, 1, &grid).unwrap();
        assert_eq!(curve.grid.len(), 65);
        assert!(curve.density.iter().all(|&d| d >= 0.0 && d.is_finite()));
        // raw mass close to one: the Laplace ratio is a genuine density
        assert!(
            (curve.normalization - 1.0).abs() < 0.05,
            "normalization = {}",
            curve.normalization
        );
        // even in xi
        let n = curve.grid.len();
        for i in 0..n / 2 {
            let a = curve.density[i];
            let b = curve.density[n - 1 - i];
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                "asymmetry at {i}: {a} vs {b}"
            );
        }
        // renormalized curve integrates to 1 on the grid
        let mut total = 0.0;
        for i in 1..n {
            total +=
                0.5 * (curve.density[i] + curve.density[i - 1]) * (curve.grid[i] - curve.grid[i - 1]);
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_grids_are_validated() {
        let s = sv_series(40, 3);
        let model = SvParams::new(0.9, 0.3, 0.01).unwrap();
        let bad = GridSpec::Explicit(vec![0.0, 0.0, 1.0]);
        assert!(conditional_return_density(&model, &s, 1, &bad).is_err());
        let short = GridSpec::Explicit(vec![0.0, 1.0]);
        assert!(conditional_return_density(&model, &s, 1, &short).is_err());
    }
}
