//! Likelihood-based inference for latent-volatility return models.
//!
//! Two model families are supported, both of the form
//! `x_t = sqrt(s^2 e^{h_t}) eps_t` with a stationary Gaussian latent
//! log-volatility field `h`:
//!
//! * **sv** -- the classic stochastic-volatility model with an AR(1) latent
//!   field; volatility memory decays exponentially.
//! * **mrw** -- a multifractal random walk in discrete time, whose latent
//!   field has a logarithmically decaying autocovariance out to a decorrelation
//!   scale `R`; volatility memory decays slowly and the integrated series
//!   exhibits multifractal scaling.
//!
//! The likelihood of either model involves integrating out the latent field.
//! This crate does that with a Laplace approximation: the joint density
//! `p(x, h)` is strictly log-concave in `h`, its mode is found by a damped
//! Newton iteration on banded systems, and the Gaussian integral around the
//! mode gives `log p(x)` up to a curvature determinant that the banded
//! Cholesky factorization yields for free. Everything downstream -- maximum
//! likelihood fitting, latent smoothing and filtering, forecasting, and
//! conditional return densities -- is built on that one primitive.
//!
//! # Quick tour
//!
//! ```
//! use latvol::model::{family, MrwParams};
//! use latvol::inference::{fit_ml, smooth, FitOptions};
//! use latvol::simulate::sample_mrw;
//! use latvol::ReturnSeries;
//!
//! // simulate a multifractal path ...
//! let truth = MrwParams::new(0.35, 0.01, 256.0, 100).unwrap();
//! let sim = sample_mrw(&truth, 512, 7).unwrap();
//! let series = ReturnSeries::new(sim.returns).unwrap();
//!
//! // ... recover the latent volatility under the true parameters
//! let path = smooth(&truth, &series).unwrap();
//! assert_eq!(path.values.len(), 512);
//!
//! // ... or fit parameters from scratch
//! let opts = FitOptions { max_evals: 60, restarts: 0, ..FitOptions::default() };
//! let fit = fit_ml(family("mrw").unwrap(), &series, &opts).unwrap();
//! assert!(fit.log_likelihood.is_finite());
//! ```
//!
//! # Module map
//!
//! * [`model`] -- model definitions, the [`model::LatentModel`] trait and the
//!   name-keyed family registry.
//! * [`toeplitz`] -- Durbin-Levinson and Levinson recursions for the
//!   stationary-covariance structure everything rests on.
//! * [`band`] -- symmetric band matrices and their Cholesky factorization.
//! * [`laplace`] -- posterior modes and the Laplace likelihood.
//! * [`inference`] -- fitting, smoothing/filtering, forecasting, conditional
//!   return densities.
//! * [`simulate`] -- exact samplers and multifractal scaling diagnostics.
//! * [`series`] -- the validated return-series container.

pub mod band;
pub mod error;
pub mod inference;
pub mod laplace;
pub mod model;
mod optim;
pub mod series;
pub mod simulate;
pub mod toeplitz;

pub use error::{Error, Result};
pub use series::ReturnSeries;
