//! Method-of-moments estimation: empirical moment summaries, the classic
//! (variance + fourth moment) estimator, the modified (absolute first moment
//! + variance) estimator built on the shape map L and its numerical inverse,
//! and the feasibility predicates for both.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Params, special};
use special::{lgamma, psi};

/// Infimum of the range of [`l_function`]: (1/2) ln(pi/2), attained in the
/// normal limit a -> inf with b = sigma^2/a. The moment ratio of any normal
/// distribution sits exactly here, so the modified estimator does not exist
/// at or below this value.
pub const L_BOUNDARY: f64 = 0.225_791_352_644_727_43;

/// Tolerance added to [`L_BOUNDARY`] when inverting L: targets this close to
/// the boundary are reported as infeasible rather than inverted.
pub const ELL_BOUNDARY_TOL: f64 = 1e-10;

/// Cap on the bracket search of [`ell`]; targets requiring a shape beyond
/// this are reported as boundary failures rather than silently extrapolated.
pub const ELL_SHAPE_CAP: f64 = 1e8;

/// An ordered collection of finite real observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("sample must contain at least one value".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("sample contains non-finite value {bad}")));
        }
        Ok(Sample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Single-column CSV with header `x`, 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 26 + 2);
        out.push_str("x\n");
        for v in &self.values {
            out.push_str(&format!("{v:.16e}\n"));
        }
        out
    }

    /// Parses the single-column CSV produced by [`Sample::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "x" => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected header line 'x', got {:?}",
                    other.unwrap_or("")
                )));
            }
        }
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: invalid number {t:?}", i + 2)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("line {}: non-finite value", i + 2)));
            }
            values.push(v);
        }
        Sample::new(values)
    }
}

/// Empirical moment summary of a sample.
///
/// The hatted fields are centered at the empirical mean; the primed fields
/// are taken about the known location (default 0) without centering. Which
/// family an estimator consumes is decided by `known_m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub v_hat: f64,
    pub k_hat: f64,
    pub a_abs_hat: f64,
    pub v_prime: f64,
    pub k_prime: f64,
    pub a_abs_prime: f64,
    pub known_m: Option<f64>,
}

impl MomentSummary {
    /// Moment summary with the known-location moments set directly from
    /// population (or otherwise externally supplied) values.
    pub fn from_known_moments(v: f64, k: f64, a_abs: f64, m: f64) -> Self {
        MomentSummary {
            n: 0,
            mean: m,
            v_hat: v,
            k_hat: k,
            a_abs_hat: a_abs,
            v_prime: v,
            k_prime: k,
            a_abs_prime: a_abs,
            known_m: Some(m),
        }
    }

    pub fn location(&self) -> f64 {
        self.known_m.unwrap_or(self.mean)
    }

    pub fn variance(&self) -> f64 {
        if self.known_m.is_some() { self.v_prime } else { self.v_hat }
    }

    pub fn fourth(&self) -> f64 {
        if self.known_m.is_some() { self.k_prime } else { self.k_hat }
    }

    pub fn abs_first(&self) -> f64 {
        if self.known_m.is_some() { self.a_abs_prime } else { self.a_abs_hat }
    }
}

/// Computes the moment summary in two passes (mean first, then powers of the
/// residuals) with the naive 1/N denominators throughout.
pub fn summarize(s: &Sample, known_m: Option<f64>) -> Result<MomentSummary> {
    let n = s.len();
    if n < 2 {
        return Err(Error::Domain(format!("moment summary needs n >= 2, got {n}")));
    }
    if let Some(m) = known_m {
        if !m.is_finite() {
            return Err(Error::Domain(format!("known location must be finite, got {m}")));
        }
    }
    let nf = n as f64;
    let mean = s.values.iter().sum::<f64>() / nf;
    let center_prime = known_m.unwrap_or(0.0);

    let (mut v, mut k, mut a) = (0.0, 0.0, 0.0);
    let (mut vp, mut kp, mut ap) = (0.0, 0.0, 0.0);
    for &x in &s.values {
        let d = x - mean;
        let d2 = d * d;
        v += d2;
        k += d2 * d2;
        a += d.abs();
        let e = x - center_prime;
        let e2 = e * e;
        vp += e2;
        kp += e2 * e2;
        ap += e.abs();
    }
    Ok(MomentSummary {
        n,
        mean,
        v_hat: v / nf,
        k_hat: k / nf,
        a_abs_hat: a / nf,
        v_prime: vp / nf,
        k_prime: kp / nf,
        a_abs_prime: ap / nf,
        known_m,
    })
}

/// Which estimator produced a [`FitResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClassicMme,
    ModifiedMme,
    Mle,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::ClassicMme => "classic_mme",
            Method::ModifiedMme => "modified_mme",
            Method::Mle => "mle",
        }
    }

    /// Short column label used by the simulation reports.
    pub fn short_label(&self) -> &'static str {
        match self {
            Method::ClassicMme => "classic",
            Method::ModifiedMme => "modified",
            Method::Mle => "mle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of a parameter fit. `params` is present exactly when the
/// estimate exists (`feasible`, for the moment estimators) or when the
/// optimizer produced a best point (maximum likelihood, which attaches the
/// point even when flagged as not converged).
#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub params: Option<Params>,
    pub method: Method,
    pub feasible: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Classic method of moments: matches the variance and the fourth moment.
///
/// a = 3 V^2 / (K - 3 V^2), b = K/(3V) - V, m = mean (or the known
/// location). Exists only on the event K > 3 V^2.
pub fn classic_mme(ms: &MomentSummary) -> FitResult {
    let v = ms.variance();
    let k = ms.fourth();
    let m_hat = ms.location();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("v".into(), v);
    diagnostics.insert("k".into(), k);
    diagnostics.insert("m_hat".into(), m_hat);
    diagnostics.insert("condition_gap".into(), k - 3.0 * v * v);

    let feasible = v > 0.0 && k > 3.0 * v * v;
    let params = if feasible {
        let excess = k - 3.0 * v * v;
        let a = 3.0 * v * v / excess;
        let b = k / (3.0 * v) - v;
        Some(Params::new(a, b, m_hat).expect("feasibility implies valid parameters"))
    } else {
        None
    };
    FitResult { params, method: Method::ClassicMme, feasible, diagnostics }
}

/// Modified method of moments: matches the absolute first moment and the
/// variance. a = ell(0.5 ln V - ln A), b = V / a, m = mean (or the known
/// location). Exists only when the moment ratio is above [`L_BOUNDARY`].
pub fn modified_mme(ms: &MomentSummary) -> FitResult {
    let v = ms.variance();
    let a_abs = ms.abs_first();
    let m_hat = ms.location();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("v".into(), v);
    diagnostics.insert("a_abs".into(), a_abs);
    diagnostics.insert("m_hat".into(), m_hat);

    if !(v > 0.0 && a_abs > 0.0) {
        return FitResult {
            params: None,
            method: Method::ModifiedMme,
            feasible: false,
            diagnostics,
        };
    }
    let target = 0.5 * v.ln() - a_abs.ln();
    diagnostics.insert("l_target".into(), target);
    match ell_detailed(target) {
        Ok((a, iterations)) => {
            diagnostics.insert("ell_iterations".into(), iterations as f64);
            let b = v / a;
            FitResult {
                params: Some(Params::new(a, b, m_hat).expect("inversion returns a > 0")),
                method: Method::ModifiedMme,
                feasible: true,
                diagnostics,
            }
        }
        Err(Error::Boundary(_)) => {
            diagnostics.insert("ell_boundary_failure".into(), 1.0);
            FitResult {
                params: None,
                method: Method::ModifiedMme,
                feasible: false,
                diagnostics,
            }
        }
        Err(_) => {
            diagnostics.insert("boundary_gap".into(), target - L_BOUNDARY);
            FitResult {
                params: None,
                method: Method::ModifiedMme,
                feasible: false,
                diagnostics,
            }
        }
    }
}

/// The classic estimator exists: K > 3 V^2 (and V > 0).
pub fn feasibility_classic(ms: &MomentSummary) -> bool {
    let v = ms.variance();
    v > 0.0 && ms.fourth() > 3.0 * v * v
}

/// The modified estimator exists: 0.5 ln V - ln A > (1/2) ln(pi/2).
pub fn feasibility_modified(ms: &MomentSummary) -> bool {
    let v = ms.variance();
    let a_abs = ms.abs_first();
    v > 0.0 && a_abs > 0.0 && 0.5 * v.ln() - a_abs.ln() > L_BOUNDARY
}

// ---------------------------------------------------------------------------
// The shape map L(a) = 0.5 ln(pi/2) + 0.5 ln a + ln Γ(a) - ln Γ(a + 1/2),
// a strictly decreasing bijection (0, inf) -> (L_BOUNDARY, inf). It equals
// 0.5 ln V - ln A at shape a, so its inverse turns the empirical moment
// ratio into the shape estimate.
// ---------------------------------------------------------------------------

/// L(a) for a > 0.
pub fn l_function(a: f64) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Domain(format!("L requires finite a > 0, got {a}")));
    }
    Ok(l_fn(a))
}

/// L'(a) = 1/(2a) + ψ(a) - ψ(a + 1/2), strictly negative, for a > 0.
pub fn l_prime(a: f64) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Domain(format!("L' requires finite a > 0, got {a}")));
    }
    Ok(l_prime_fn(a))
}

pub(crate) fn l_fn(a: f64) -> f64 {
    if a < 10.0 {
        L_BOUNDARY + 0.5 * a.ln() + lgamma(a) - lgamma(a + 0.5)
    } else {
        // Stirling form; the leading (a - 1/2) ln a terms cancel exactly,
        // which keeps L - L_BOUNDARY (of size ~ 1/(8a)) fully accurate for
        // large a where the direct difference of log-gammas would lose it.
        // 1/2 - a ln(1 + 1/(2a)) = a * [t - ln(1+t)] for t = 1/(2a).
        let t = 0.5 / a;
        let excess = a * special::ln1p_residual(t) + special::binet(a) - special::binet(a + 0.5);
        L_BOUNDARY + excess
    }
}

pub(crate) fn l_prime_fn(a: f64) -> f64 {
    if a < 10.0 {
        0.5 / a + psi(a) - psi(a + 0.5)
    } else {
        // same cancellation-free split for the derivative
        let t = 0.5 / a;
        let head = special::ln1p_residual(t) - 0.25 / (a * (a + 0.5));
        let log_ratio = -t.ln_1p(); // ln(a / (a + 1/2))
        let mut tail = 0.0;
        for (k, coeff) in special::PSI_COEFFS.iter().enumerate() {
            let two_k = 2.0 * (k + 1) as f64;
            // a^{-2k} - (a+1/2)^{-2k}, computed without cancellation
            let diff = (-two_k * a.ln()).exp() * (-(two_k * log_ratio).exp_m1());
            tail += coeff * diff;
        }
        head - tail
    }
}

/// Inverse of [`l_function`]: returns the shape a with L(a) = u.
///
/// Errors with [`Error::Infeasible`] when `u` is at or below the boundary of
/// the range, and with [`Error::Boundary`] when the root lies beyond the
/// bracket cap [`ELL_SHAPE_CAP`] (the map is numerically flat there).
pub fn ell(u: f64) -> Result<f64> {
    ell_detailed(u).map(|(a, _)| a)
}

pub(crate) fn ell_detailed(u: f64) -> Result<(f64, u32)> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("ell requires finite u, got {u}")));
    }
    if u <= L_BOUNDARY + ELL_BOUNDARY_TOL {
        return Err(Error::Infeasible(format!(
            "moment ratio {u} is not above the normal-limit boundary {L_BOUNDARY}"
        )));
    }

    // bracket the root, expanding geometrically from a = 1
    let mut lo = 1.0;
    let mut hi = 1.0;
    let l1 = l_fn(1.0);
    if u < l1 {
        // root above 1: L is decreasing, find hi with L(hi) <= u
        loop {
            hi *= 2.0;
            if hi > ELL_SHAPE_CAP {
                return Err(Error::Boundary(format!(
                    "target {u} needs shape beyond cap {ELL_SHAPE_CAP} (L({ELL_SHAPE_CAP}) = {})",
                    l_fn(ELL_SHAPE_CAP)
                )));
            }
            if l_fn(hi) <= u {
                break;
            }
            lo = hi;
        }
    } else {
        loop {
            lo *= 0.5;
            if l_fn(lo) >= u {
                break;
            }
            hi = lo;
            debug_assert!(lo > 1e-300, "L(0+) diverges, bracket must close");
        }
    }

    // Newton with bisection safeguard on the bracket [lo, hi]
    let tol = 1e-12 * u.abs().max(1.0);
    let mut a = 0.5 * (lo + hi);
    let mut iterations = 0u32;
    for _ in 0..200 {
        iterations += 1;
        let f = l_fn(a) - u;
        if f.abs() < tol {
            return Ok((a, iterations));
        }
        if f > 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let step = f / l_prime_fn(a);
        let candidate = a - step;
        a = if candidate > lo && candidate < hi {
            candidate
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < f64::EPSILON * a {
            return Ok((a, iterations));
        }
    }
    Ok((a, iterations))
}
