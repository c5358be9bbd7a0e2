//! Maximum-likelihood estimation by Nelder-Mead search on the
//! log-likelihood, with evaluation-time clamping of out-of-range proposals:
//! non-positive shape or scale is set to `clamp_param`, and the derived
//! sigma = sqrt(ab) and nu = 1/a are floored at `clamp_sigma_nu`.

use std::collections::BTreeMap;

use crate::dist::{DensityKernel, PDF_LOCATION_CLAMP};
use crate::error::{Error, Result};
use crate::moments::{classic_mme, modified_mme, summarize, FitResult, Method, Sample};
use crate::Params;

#[derive(Clone, Copy, Debug)]
pub struct MleConfig {
    /// Replacement for non-positive shape/scale proposals.
    pub clamp_param: f64,
    /// Floor on sigma = sqrt(ab) and nu = 1/a.
    pub clamp_sigma_nu: f64,
    /// Iteration budget of the simplex search.
    pub max_iter: usize,
    /// Convergence threshold on the value spread across the simplex.
    pub tol_value: f64,
    /// Convergence threshold on the simplex diameter.
    pub tol_diameter: f64,
    /// Search in (ln a, ln b) instead of (a, b). Off by default; the direct
    /// parameterization with clamping is the reference procedure.
    pub log_parameterized: bool,
    /// Starting point; when absent the moment estimators provide one.
    pub init: Option<Params>,
}

impl Default for MleConfig {
    fn default() -> Self {
        MleConfig {
            clamp_param: 1e-5,
            clamp_sigma_nu: 1e-4,
            max_iter: 500,
            tol_value: 1e-10,
            tol_diameter: 1e-8,
            log_parameterized: false,
            init: None,
        }
    }
}

impl MleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.clamp_param > 0.0) || !(self.clamp_sigma_nu > 0.0) {
            return Err(Error::Domain("clamps must be positive".into()));
        }
        if self.max_iter < 100 {
            return Err(Error::Domain(format!(
                "max_iter must be >= 100, got {}",
                self.max_iter
            )));
        }
        if !(self.tol_value > 0.0) || !(self.tol_diameter > 0.0) {
            return Err(Error::Domain("simplex tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Negative log-likelihood -sum_i ln p(x_i) with |x_i - m| clamped below at
/// the density's location clamp, so the value stays finite for every valid
/// parameter triple.
pub fn neg_log_likelihood(p: &Params, s: &Sample) -> f64 {
    let kernel = DensityKernel::new(p);
    let m = p.m();
    let mut total = 0.0;
    for &x in s.values() {
        let y = (x - m).abs().max(PDF_LOCATION_CLAMP);
        total -= kernel.log_pdf_at_distance(y);
    }
    total
}

/// Applies the clamping rules to a raw proposal, returning the parameters
/// the likelihood is actually evaluated at and whether any clamp bound.
fn clamp_proposal(a_raw: f64, b_raw: f64, cfg: &MleConfig) -> (f64, f64, bool) {
    let mut clamped = false;
    let mut a = a_raw;
    let mut b = b_raw;
    if !(a > 0.0) {
        a = cfg.clamp_param;
        clamped = true;
    }
    if !(b > 0.0) {
        b = cfg.clamp_param;
        clamped = true;
    }
    let sigma = (a * b).sqrt();
    let nu = 1.0 / a;
    if sigma < cfg.clamp_sigma_nu || nu < cfg.clamp_sigma_nu {
        let sigma = sigma.max(cfg.clamp_sigma_nu);
        let nu = nu.max(cfg.clamp_sigma_nu);
        a = 1.0 / nu;
        b = sigma * sigma * nu;
        clamped = true;
    }
    (a, b, clamped)
}

struct NmResult {
    best_x: Vec<f64>,
    best_f: f64,
    iterations: usize,
    evals: usize,
    converged: bool,
    final_spread: f64,
    final_diameter: f64,
}

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2), converged when the simplex value spread and diameter fall
/// under their thresholds.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    max_iter: usize,
    tol_value: f64,
    tol_diameter: f64,
) -> NmResult {
    let dim = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let fx0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += if x[i] != 0.0 { 0.05 * x[i].abs() } else { 0.00025 };
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    let spread = |s: &[(Vec<f64>, f64)]| s[dim].1 - s[0].1;
    let diameter = |s: &[(Vec<f64>, f64)]| {
        let best = &s[0].0;
        s.iter()
            .skip(1)
            .map(|(x, _)| {
                x.iter()
                    .zip(best)
                    .map(|(xi, bi)| (xi - bi).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };

    let mut iterations = 0;
    let mut converged = false;
    simplex.sort_by(|l, r| l.1.total_cmp(&r.1));
    while iterations < max_iter {
        if spread(&simplex) < tol_value && diameter(&simplex) < tol_diameter {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();

        let reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + (c - w))
            .collect();
        let fr = eval(&reflected, &mut evals);

        if fr < simplex[0].1 {
            let expanded: Vec<f64> = centroid
                .iter()
                .zip(&reflected)
                .map(|(c, r)| c + 2.0 * (r - c))
                .collect();
            let fe = eval(&expanded, &mut evals);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let (towards, f_ref) = if fr < worst.1 {
                (reflected.clone(), fr)
            } else {
                (worst.0.clone(), worst.1)
            };
            let contracted: Vec<f64> = centroid
                .iter()
                .zip(&towards)
                .map(|(c, t)| c + 0.5 * (t - c))
                .collect();
            let fc = eval(&contracted, &mut evals);
            if fc <= f_ref {
                simplex[dim] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    let fx = eval(&x, &mut evals);
                    *entry = (x, fx);
                }
            }
        }
        simplex.sort_by(|l, r| l.1.total_cmp(&r.1));
    }

    NmResult {
        best_x: simplex[0].0.clone(),
        best_f: simplex[0].1,
        iterations,
        evals,
        converged,
        final_spread: spread(&simplex),
        final_diameter: diameter(&simplex),
    }
}

/// Fits by maximum likelihood. With `known_m` the search runs over (a, b);
/// otherwise over (a, b, m). Starts from the modified moment estimate when
/// it exists, then the classic one, then (1, V-hat, mean).
///
/// A fit that exhausts `max_iter`, or whose optimum sits on a clamp, is
/// returned with `feasible = false` and the best point attached.
pub fn fit_mle(s: &Sample, cfg: &MleConfig, known_m: Option<f64>) -> Result<FitResult> {
    cfg.validate()?;
    let ms = summarize(s, known_m)?;

    let init = match cfg.init {
        Some(p) => p,
        None => {
            let modified = modified_mme(&ms);
            let classic = classic_mme(&ms);
            modified
                .params
                .or(classic.params)
                .map(Ok)
                .unwrap_or_else(|| {
                    let b0 = if ms.variance() > 0.0 { ms.variance() } else { 1e-4 };
                    Params::new(1.0, b0, ms.location())
                })?
        }
    };

    let m_fixed = known_m;
    let to_search_space = |a: f64, b: f64| -> (f64, f64) {
        if cfg.log_parameterized {
            (a.ln(), b.ln())
        } else {
            (a, b)
        }
    };
    let from_search_space = |t0: f64, t1: f64| -> (f64, f64) {
        if cfg.log_parameterized {
            (t0.exp(), t1.exp())
        } else {
            (t0, t1)
        }
    };

    let (t0, t1) = to_search_space(init.a(), init.b());
    let x0 = match m_fixed {
        Some(_) => vec![t0, t1],
        None => vec![t0, t1, init.m()],
    };

    let objective = |x: &[f64]| -> f64 {
        let (a_raw, b_raw) = from_search_space(x[0], x[1]);
        let (a, b, _) = clamp_proposal(a_raw, b_raw, cfg);
        let m = match m_fixed {
            Some(m) => m,
            None => x[2],
        };
        if !m.is_finite() {
            return f64::INFINITY;
        }
        let p = Params::new(a, b, m).expect("clamped proposal is valid");
        neg_log_likelihood(&p, s)
    };

    let nm = nelder_mead(objective, &x0, cfg.max_iter, cfg.tol_value, cfg.tol_diameter);

    let (a_raw, b_raw) = from_search_space(nm.best_x[0], nm.best_x[1]);
    let (a, b, clamp_active) = clamp_proposal(a_raw, b_raw, cfg);
    let m = match m_fixed {
        Some(m) => m,
        None => nm.best_x[2],
    };
    let params = Params::new(a, b, m)?;

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("iterations".into(), nm.iterations as f64);
    diagnostics.insert("evaluations".into(), nm.evals as f64);
    diagnostics.insert("nll".into(), nm.best_f);
    diagnostics.insert("final_spread".into(), nm.final_spread);
    diagnostics.insert("final_diameter".into(), nm.final_diameter);
    diagnostics.insert("converged".into(), if nm.converged { 1.0 } else { 0.0 });
    diagnostics.insert("clamp_active".into(), if clamp_active { 1.0 } else { 0.0 });
    diagnostics.insert("init_a".into(), init.a());
    diagnostics.insert("init_b".into(), init.b());

    Ok(FitResult {
        params: Some(params),
        method: Method::Mle,
        feasible: nm.converged && !clamp_active,
        diagnostics,
    })
}
