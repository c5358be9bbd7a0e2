//! Shared oracles for the integration suites: adaptive quadrature and a
//! Kolmogorov-Smirnov helper. Everything here is independent of the library
//! paths it is used to check.
#![allow(dead_code)]

/// Adaptive Simpson quadrature with Richardson acceptance test.
pub fn integrate<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    recurse(&f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Quadrature of the integral definition of the modified Bessel function of
/// the second kind: K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt.
pub fn bessel_k_quadrature(nu: f64, x: f64) -> f64 {
    // truncate where the integrand has decayed below ~1e-320
    let mut upper = 5.0f64;
    while x * upper.cosh() - nu.abs() * upper < 760.0 {
        upper += 0.5;
    }
    integrate(|t: f64| (-x * t.cosh()).exp() * (nu * t).cosh(), 0.0, upper, 1e-13)
}

/// One-sample Kolmogorov-Smirnov distance against a cdf given on a fine
/// grid (linear interpolation between nodes).
pub struct GridCdf {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
}

impl GridCdf {
    /// Builds the cdf of a density by composite Simpson over [lo, hi].
    pub fn from_pdf<F: Fn(f64) -> f64>(pdf: F, lo: f64, hi: f64, steps: usize) -> Self {
        let h = (hi - lo) / steps as f64;
        let mut xs = Vec::with_capacity(steps + 1);
        let mut ps = Vec::with_capacity(steps + 1);
        xs.push(lo);
        ps.push(0.0);
        let mut acc = 0.0;
        let mut f_left = pdf(lo);
        for i in 0..steps {
            let a = lo + i as f64 * h;
            let b = a + h;
            let fm = pdf(0.5 * (a + b));
            let f_right = pdf(b);
            acc += h / 6.0 * (f_left + 4.0 * fm + f_right);
            xs.push(b);
            ps.push(acc);
            f_left = f_right;
        }
        // normalize the tiny truncation remainder away
        let total = acc;
        for p in &mut ps {
            *p /= total;
        }
        GridCdf { xs, ps }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let idx = self.xs.partition_point(|&g| g <= x) - 1;
        let (x0, x1) = (self.xs[idx], self.xs[idx + 1]);
        let (p0, p1) = (self.ps[idx], self.ps[idx + 1]);
        p0 + (p1 - p0) * (x - x0) / (x1 - x0)
    }

    /// KS distance of a sample against this cdf.
    pub fn ks_distance(&self, values: &[f64]) -> f64 {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in sorted.iter().enumerate() {
            let f = self.eval(x);
            d = d.max(((i + 1) as f64 / n - f).abs());
            d = d.max((f - i as f64 / n).abs());
        }
        d
    }
}
