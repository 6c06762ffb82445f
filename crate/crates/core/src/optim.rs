//! Derivative-free minimization used by the fitter.
//!
//! A standard Nelder-Mead simplex with the usual reflection/expansion/
//! contraction/shrink coefficients. Objective values of `+inf` are legal (the
//! fitter maps failed likelihood evaluations to `+inf`), the simplex simply
//! moves away from them.

pub(crate) struct NelderMead {
    pub max_evals: usize,
    /// Absolute function-spread tolerance, scaled by `1 + |f_best|`.
    pub ftol: f64,
    /// Simplex diameter tolerance, scaled by `1 + |x_best|_inf`.
    pub xtol: f64,
    /// Side length of the initial axis-aligned simplex.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_evals: 400,
            ftol: 1e-8,
            xtol: 1e-6,
            initial_step: 0.25,
        }
    }
}

pub(crate) struct NmOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
}

pub(crate) fn minimize(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMead,
) -> NmOutcome {
    const RHO: f64 = 1.0; // reflection
    const CHI: f64 = 2.0; // expansion
    const GAMMA: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |p: &[f64], count: &mut usize| -> f64 {
        *count += 1;
        let v = objective(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // initial simplex: x0 plus a step along each axis
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evaluations);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        let f = eval(&p, &mut evaluations);
        simplex.push((p, f));
    }

    if simplex.iter().all(|(_, f)| !f.is_finite()) {
        return NmOutcome {
            x: x0.to_vec(),
            f: f0,
            converged: false,
        };
    }

    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best_f = simplex[0].1;
        let worst_f = simplex[n].1;

        // termination: function spread and simplex diameter both small
        let spread_ok = (worst_f - best_f).abs() <= opts.ftol * (1.0 + best_f.abs());
        let scale = 1.0
            + simplex[0]
                .0
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| {
                p.iter()
                    .zip(simplex[0].0.iter())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0f64, f64::max);
        if spread_ok && diameter <= opts.xtol * scale && worst_f.is_finite() {
            return NmOutcome {
                x: simplex[0].0.clone(),
                f: simplex[0].1,
                converged: true,
            };
        }
        if evaluations >= opts.max_evals {
            return NmOutcome {
                x: simplex[0].0.clone(),
                f: simplex[0].1,
                converged: false,
            };
        }

        // centroid of the n best points
        let mut centroid = vec![0.0; n];
        for (p, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p.iter()) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let point_at = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst.iter())
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = point_at(RHO);
        let f_r = eval(&reflected, &mut evaluations);

        if f_r < simplex[0].1 {
            let expanded = point_at(RHO * CHI);
            let f_e = eval(&expanded, &mut evaluations);
            simplex[n] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
            continue;
        }
        if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
            continue;
        }

        let shrink = if f_r < simplex[n].1 {
            // outside contraction
            let contracted = point_at(RHO * GAMMA);
            let f_c = eval(&contracted, &mut evaluations);
            if f_c <= f_r {
                simplex[n] = (contracted, f_c);
                false
            } else {
                true
            }
        } else {
            // inside contraction
            let contracted = point_at(-GAMMA);
            let f_c = eval(&contracted, &mut evaluations);
            if f_c < simplex[n].1 {
                simplex[n] = (contracted, f_c);
                false
            } else {
                true
            }
        };

        if shrink {
            let anchor = simplex[0].0.clone();
            for entry in simplex.iter_mut().skip(1) {
                let p: Vec<f64> = anchor
                    .iter()
                    .zip(entry.0.iter())
                    .map(|(a, v)| a + SIGMA * (v - a))
                    .collect();
                let f = eval(&p, &mut evaluations);
                *entry = (p, f);
            }
        }
    }
}
