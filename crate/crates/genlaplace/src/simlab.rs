//! Monte Carlo harness: per-(a, b, N) bias/MSE/standard-error rows for the
//! three estimators, feasibility probabilities and location-estimation
//! accuracy. Replications run in parallel on independent derived streams
//! and are reduced in replication order with pairwise summation, so reports
//! are byte-identical no matter how many worker threads run them.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::dist::sample;
use crate::error::{Error, Result};
use crate::mle::{fit_mle, MleConfig};
use crate::moments::{
    classic_mme, feasibility_classic, feasibility_modified, modified_mme, summarize, Method,
};
use crate::seed::derive_seed;
use crate::Params;

const REP_TAG: u64 = 0x5245_5053;
const FEAS_TAG: u64 = 0x4645_4153;

/// Monte Carlo design: the grid of parameter cells plus the sampling
/// protocol shared by every cell.
#[derive(Clone, Debug, Serialize)]
pub struct SimGrid {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    /// Sample size N per replication.
    pub sample_size: usize,
    /// Replications k per cell.
    pub replications: usize,
    /// True location of the generating law.
    pub m_true: f64,
    /// Fit with the location treated as known (uncentered moments) or
    /// unknown (centered moments, location estimated by the mean).
    pub m_known: bool,
    pub seed: u64,
}

impl Default for SimGrid {
    fn default() -> Self {
        SimGrid {
            a_values: vec![0.25, 0.5, 1.0, 2.0, 3.0],
            b_values: vec![0.01, 0.1, 1.0, 5.0],
            sample_size: 1000,
            replications: 10_000,
            m_true: 0.0,
            m_known: false,
            seed: 0,
        }
    }
}

impl SimGrid {
    fn validate(&self) -> Result<()> {
        if self.a_values.is_empty() || self.b_values.is_empty() {
            return Err(Error::Domain("parameter grid must be non-empty".into()));
        }
        for &v in self.a_values.iter().chain(&self.b_values) {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!("grid values must be positive, got {v}")));
            }
        }
        if self.sample_size < 2 {
            return Err(Error::Domain("sample size must be >= 2".into()));
        }
        if self.replications < 1 {
            return Err(Error::Domain("replication count must be >= 1".into()));
        }
        if !self.m_true.is_finite() {
            return Err(Error::Domain("true location must be finite".into()));
        }
        Ok(())
    }
}

fn serialize_method_short<S: Serializer>(m: &Method, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(m.short_label())
}

/// One cell of a simulation report.
///
/// Bias/MSE/StError are over the feasible replications only; the excluded
/// ones are accounted for in `feasibility_rate`, and `failure_count` tallies
/// abnormal exits (shape-inversion boundary failures, non-converged or
/// clamped likelihood fits) within them. The `se_mse_*` fields carry the
/// Monte Carlo standard errors of the MSE columns themselves (they appear
/// in the JSON mirror but not in the fixed-layout CSV).
#[derive(Clone, Debug, Serialize)]
pub struct SimRow {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub k: usize,
    #[serde(serialize_with = "serialize_method_short")]
    pub estimator: Method,
    pub bias_a: f64,
    pub mse_a: f64,
    pub se_a: f64,
    pub bias_b: f64,
    pub mse_b: f64,
    pub se_b: f64,
    pub bias_m: f64,
    pub mse_m: f64,
    pub se_m: f64,
    pub feasibility_rate: f64,
    pub failure_count: usize,
    pub se_mse_a: f64,
    pub se_mse_b: f64,
    pub se_mse_m: f64,
}

/// Monte Carlo estimates of the two existence probabilities at one (a, b, N).
#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityRow {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub k: usize,
    pub p_modified: f64,
    pub p_classic: f64,
}

/// Accuracy of the location estimate m-hat = mean, over all replications.
#[derive(Clone, Debug, Serialize)]
pub struct LocationRow {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub k: usize,
    pub bias_m: f64,
    pub mse_m: f64,
    pub se_m: f64,
}

/// Sums in a fixed pairwise order, independent of thread count.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

struct RepOutcome {
    estimate: Option<(f64, f64, f64)>,
    failed: bool,
}

fn run_replication(
    p: &Params,
    n: usize,
    known_m: Option<f64>,
    estimator: Method,
    rep_seed: u64,
) -> RepOutcome {
    let s = sample(p, n, rep_seed).expect("n >= 2 validated");
    let fit = match estimator {
        Method::ClassicMme => {
            let ms = summarize(&s, known_m).expect("n >= 2 validated");
            classic_mme(&ms)
        }
        Method::ModifiedMme => {
            let ms = summarize(&s, known_m).expect("n >= 2 validated");
            modified_mme(&ms)
        }
        Method::Mle => match fit_mle(&s, &MleConfig::default(), known_m) {
            Ok(fit) => fit,
            Err(_) => {
                return RepOutcome { estimate: None, failed: true };
            }
        },
    };
    if fit.feasible {
        let q = fit.params.expect("feasible fit carries parameters");
        RepOutcome { estimate: Some((q.a(), q.b(), q.m())), failed: false }
    } else {
        let failed = match estimator {
            Method::ModifiedMme => fit.diagnostics.contains_key("ell_boundary_failure"),
            Method::Mle => true,
            Method::ClassicMme => false,
        };
        RepOutcome { estimate: None, failed }
    }
}

/// (bias, mse, standard error of the mean, standard error of the mse) of
/// `values` against `truth`.
fn column_stats(values: &[f64], truth: f64) -> (f64, f64, f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    }
    let kf = k as f64;
    let mean = pairwise_sum(values) / kf;
    let sq: Vec<f64> = values.iter().map(|v| (v - truth) * (v - truth)).collect();
    let mse = pairwise_sum(&sq) / kf;
    let (se, se_mse) = if k > 1 {
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&dev) / (kf - 1.0);
        let dev_sq: Vec<f64> = sq.iter().map(|q| (q - mse) * (q - mse)).collect();
        let var_sq = pairwise_sum(&dev_sq) / (kf - 1.0);
        (var.sqrt() / kf.sqrt(), var_sq.sqrt() / kf.sqrt())
    } else {
        (0.0, 0.0)
    };
    (mean - truth, mse, se, se_mse)
}

fn cell_row(
    a: f64,
    b: f64,
    grid: &SimGrid,
    estimator: Method,
    outcomes: &[RepOutcome],
) -> SimRow {
    let k = outcomes.len();
    let feasible: Vec<&(f64, f64, f64)> =
        outcomes.iter().filter_map(|o| o.estimate.as_ref()).collect();
    let failure_count = outcomes.iter().filter(|o| o.failed).count();

    let a_hats: Vec<f64> = feasible.iter().map(|e| e.0).collect();
    let b_hats: Vec<f64> = feasible.iter().map(|e| e.1).collect();
    let m_hats: Vec<f64> = feasible.iter().map(|e| e.2).collect();
    let (bias_a, mse_a, se_a, se_mse_a) = column_stats(&a_hats, a);
    let (bias_b, mse_b, se_b, se_mse_b) = column_stats(&b_hats, b);
    let (bias_m, mse_m, se_m, se_mse_m) = column_stats(&m_hats, grid.m_true);

    SimRow {
        a,
        b,
        n: grid.sample_size,
        k,
        estimator,
        bias_a,
        mse_a,
        se_a,
        bias_b,
        mse_b,
        se_b,
        bias_m,
        mse_m,
        se_m,
        feasibility_rate: feasible.len() as f64 / k as f64,
        failure_count,
        se_mse_a,
        se_mse_b,
        se_mse_m,
    }
}

/// Runs the full grid for one estimator: per cell, `replications`
/// independent samples of size `sample_size` are drawn, summarized in the
/// grid's location mode and fitted.
///
/// Replication streams depend only on (seed, cell index, replication
/// index), so different estimators see identical samples and reruns are
/// reproducible regardless of parallelism.
pub fn run_grid(grid: &SimGrid, estimator: Method) -> Result<Vec<SimRow>> {
    grid.validate()?;
    let known_m = grid.m_known.then_some(grid.m_true);
    let mut rows = Vec::with_capacity(grid.a_values.len() * grid.b_values.len());
    for (ai, &a) in grid.a_values.iter().enumerate() {
        for (bi, &b) in grid.b_values.iter().enumerate() {
            let cell = (ai * grid.b_values.len() + bi) as u64;
            let p = Params::new(a, b, grid.m_true)?;
            let outcomes: Vec<RepOutcome> = (0..grid.replications as u64)
                .into_par_iter()
                .map(|rep| {
                    let rep_seed = derive_seed(grid.seed, &[REP_TAG, cell, rep]);
                    run_replication(&p, grid.sample_size, known_m, estimator, rep_seed)
                })
                .collect();
            rows.push(cell_row(a, b, grid, estimator, &outcomes));
        }
    }
    Ok(rows)
}

/// Monte Carlo estimates of the existence probabilities of both estimators
/// for small samples, in the unknown-location (centered-moment) mode.
pub fn feasibility_table(
    a: f64,
    b: f64,
    n_values: &[usize],
    replications: usize,
    seed: u64,
) -> Result<Vec<FeasibilityRow>> {
    let p = Params::new(a, b, 0.0)?;
    if replications < 1 {
        return Err(Error::Domain("replication count must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for (ni, &n) in n_values.iter().enumerate() {
        if n < 2 {
            return Err(Error::Domain("sample size must be >= 2".into()));
        }
        let hits: Vec<(bool, bool)> = (0..replications as u64)
            .into_par_iter()
            .map(|rep| {
                let rep_seed = derive_seed(seed, &[FEAS_TAG, ni as u64, rep]);
                let s = sample(&p, n, rep_seed).expect("n >= 2");
                let ms = summarize(&s, None).expect("n >= 2");
                (feasibility_modified(&ms), feasibility_classic(&ms))
            })
            .collect();
        let kf = replications as f64;
        rows.push(FeasibilityRow {
            a,
            b,
            n,
            k: replications,
            p_modified: hits.iter().filter(|h| h.0).count() as f64 / kf,
            p_classic: hits.iter().filter(|h| h.1).count() as f64 / kf,
        });
    }
    Ok(rows)
}

/// Accuracy of m-hat = mean per cell, over all replications (the mean always
/// exists, so nothing is excluded). Uses the same replication streams as
/// [`run_grid`], in the unknown-location mode.
pub fn location_table(grid: &SimGrid) -> Result<Vec<LocationRow>> {
    grid.validate()?;
    let mut rows = Vec::with_capacity(grid.a_values.len() * grid.b_values.len());
    for (ai, &a) in grid.a_values.iter().enumerate() {
        for (bi, &b) in grid.b_values.iter().enumerate() {
            let cell = (ai * grid.b_values.len() + bi) as u64;
            let p = Params::new(a, b, grid.m_true)?;
            let means: Vec<f64> = (0..grid.replications as u64)
                .into_par_iter()
                .map(|rep| {
                    let rep_seed = derive_seed(grid.seed, &[REP_TAG, cell, rep]);
                    let s = sample(&p, grid.sample_size, rep_seed).expect("n >= 2");
                    // same accumulation as the moment summary, so the rows
                    // line up bit-for-bit with the estimator reports
                    s.values().iter().sum::<f64>() / grid.sample_size as f64
                })
                .collect();
            let (bias_m, mse_m, se_m, _) = column_stats(&means, grid.m_true);
            rows.push(LocationRow {
                a,
                b,
                n: grid.sample_size,
                k: grid.replications,
                bias_m,
                mse_m,
                se_m,
            });
        }
    }
    Ok(rows)
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV report, 17 significant digits per float.
pub fn rows_to_csv(rows: &[SimRow]) -> String {
    let mut out = String::from(
        "a,b,N,k,estimator,bias_a,mse_a,se_a,bias_b,mse_b,se_b,bias_m,mse_m,se_m,feasibility_rate,failure_count\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt17(r.a),
            fmt17(r.b),
            r.n,
            r.k,
            r.estimator.short_label(),
            fmt17(r.bias_a),
            fmt17(r.mse_a),
            fmt17(r.se_a),
            fmt17(r.bias_b),
            fmt17(r.mse_b),
            fmt17(r.se_b),
            fmt17(r.bias_m),
            fmt17(r.mse_m),
            fmt17(r.se_m),
            fmt17(r.feasibility_rate),
            r.failure_count,
        ));
    }
    out
}

pub fn feasibility_to_csv(rows: &[FeasibilityRow]) -> String {
    let mut out = String::from("a,b,N,k,p_modified,p_classic\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt17(r.a),
            fmt17(r.b),
            r.n,
            r.k,
            fmt17(r.p_modified),
            fmt17(r.p_classic),
        ));
    }
    out
}

pub fn location_to_csv(rows: &[LocationRow]) -> String {
    let mut out = String::from("a,b,N,k,bias_m,mse_m,se_m\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt17(r.a),
            fmt17(r.b),
            r.n,
            r.k,
            fmt17(r.bias_m),
            fmt17(r.mse_m),
            fmt17(r.se_m),
        ));
    }
    out
}

/// JSON mirror of a report.
pub fn to_json<T: Serialize>(rows: &[T]) -> String {
    serde_json::to_string_pretty(rows).expect("report rows serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> SimGrid {
        SimGrid {
            a_values: vec![1.0],
            b_values: vec![1.0],
            sample_size: 200,
            replications: 50,
            m_true: 0.0,
            m_known: true,
            seed: 9,
        }
    }

    #[test]
    fn determinism_across_runs_and_thread_counts() {
        let grid = small_grid();
        let csv1 = rows_to_csv(&run_grid(&grid, Method::ClassicMme).unwrap());
        let csv2 = rows_to_csv(&run_grid(&grid, Method::ClassicMme).unwrap());
        assert_eq!(csv1, csv2);

        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let csv3 = single.install(|| rows_to_csv(&run_grid(&grid, Method::ClassicMme).unwrap()));
        assert_eq!(csv1, csv3);
    }

    #[test]
    fn exclusion_accounting() {
        // tiny samples at a = 3 produce plenty of infeasible replications
        let grid = SimGrid {
            a_values: vec![3.0],
            b_values: vec![1.0],
            sample_size: 10,
            replications: 400,
            m_true: 0.0,
            m_known: false,
            seed: 5,
        };
        for est in [Method::ClassicMme, Method::ModifiedMme] {
            let rows = run_grid(&grid, est).unwrap();
            let r = &rows[0];
            assert!(r.feasibility_rate > 0.0 && r.feasibility_rate < 1.0);
            let feasible = (r.feasibility_rate * r.k as f64).round() as usize;
            assert!(feasible <= r.k);
            assert!(r.mse_a >= r.bias_a * r.bias_a - 1e-12);
        }
    }

    #[test]
    fn smallest_run_does_not_crash() {
        let grid = SimGrid {
            a_values: vec![1.0],
            b_values: vec![1.0],
            sample_size: 2,
            replications: 1,
            m_true: 0.0,
            m_known: false,
            seed: 1,
        };
        for est in [Method::ClassicMme, Method::ModifiedMme] {
            let rows = run_grid(&grid, est).unwrap();
            let rate = rows[0].feasibility_rate;
            assert!(rate == 0.0 || rate == 1.0);
        }
    }

    #[test]
    fn grid_validation() {
        let mut grid = small_grid();
        grid.sample_size = 1;
        assert!(run_grid(&grid, Method::ClassicMme).is_err());
        let mut grid = small_grid();
        grid.a_values = vec![-1.0];
        assert!(run_grid(&grid, Method::ClassicMme).is_err());
    }

    #[test]
    fn same_samples_under_every_estimator() {
        // diagnostics come from the identical replication streams, so the
        // two moment estimators must report the same feasibility pattern of
        // the underlying data where their conditions coincide; here just
        // check the location stats agree between a classic run and the
        // location table
        let grid = SimGrid { m_known: false, ..small_grid() };
        let rows = run_grid(&grid, Method::ClassicMme).unwrap();
        let loc = location_table(&grid).unwrap();
        // classic at these settings is feasible in every replication, so
        // both views average the same means
        assert_eq!(rows[0].feasibility_rate, 1.0);
        assert_eq!(rows[0].bias_m, loc[0].bias_m);
        assert_eq!(rows[0].se_m, loc[0].se_m);
    }

    #[test]
    fn feasibility_probabilities_are_sane() {
        let rows = feasibility_table(1.0, 1.0, &[10, 1000], 400, 3).unwrap();
        // at N = 10 the modified estimator exists more often than the
        // classic one (~0.58 vs ~0.42); by N = 1000 both are near-certain
        assert!(rows[0].p_modified > 0.45 && rows[0].p_modified < 0.7);
        assert!(rows[0].p_classic > 0.3 && rows[0].p_classic < rows[0].p_modified);
        assert!(rows[1].p_modified > 0.99);
        assert!(rows[1].p_classic > 0.99);
    }

    #[test]
    fn csv_shape() {
        let grid = small_grid();
        let rows = run_grid(&grid, Method::ModifiedMme).unwrap();
        let csv = rows_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "a,b,N,k,estimator,bias_a,mse_a,se_a,bias_b,mse_b,se_b,bias_m,mse_m,se_m,feasibility_rate,failure_count"
        );
        let first = lines.next().unwrap();
        assert!(first.contains(",modified,"));
        assert_eq!(first.split(',').count(), 16);

        let json = to_json(&rows);
        assert!(json.contains("\"estimator\": \"modified\""));
    }
}
