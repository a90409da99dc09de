//! Augmented Dickey–Fuller test with intercept and BIC lag selection.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dm::stars;
use crate::error::{DmError, Result};
use crate::rng::SeedStream;
use crate::series::{ols_fit, Series};
use crate::stats::quantile_sorted;

/// Asymptotic Dickey–Fuller quantiles, constant-only case (MacKinnon 1996).
pub const ADF_CV_10: f64 = -2.57;
pub const ADF_CV_5: f64 = -2.86;

/// Minimum observations left for the regression with the largest lag.
pub const MIN_USABLE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdfResult {
    /// t-statistic on `y_{t−1}`.
    pub statistic: f64,
    pub selected_lags: usize,
    pub max_lags: usize,
    /// Observations in the common estimation sample.
    pub nobs: usize,
    /// BIC of each candidate lag `0..=max_lags`.
    pub bic: Vec<f64>,
    pub cv_10: f64,
    pub cv_5: f64,
    pub reject_10: bool,
    pub reject_5: bool,
}

impl AdfResult {
    pub fn stars(&self) -> &'static str {
        stars(self.reject_10, self.reject_5)
    }
}

/// `⌊12 (T/100)^{1/4}⌋`.
pub fn default_max_lags(len: usize) -> usize {
    (12.0 * (len as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Regression of `Δy_t` on `1, y_{t−1}, Δy_{t−1}, …, Δy_{t−p}` over
/// `t = start..T−1`; returns (t-statistic, BIC).
fn adf_regression(y: &[f64], dy: &[f64], p: usize, start: usize) -> Result<(f64, f64)> {
    // dy[i] = y[i+1] − y[i]; target Δy_t = dy[t−1] for t = start..len
    let len = y.len();
    let target: Vec<f64> = (start..len).map(|t| dy[t - 1]).collect();
    let level: Vec<f64> = (start..len).map(|t| y[t - 1]).collect();
    let lags: Vec<Vec<f64>> = (1..=p).map(|j| (start..len).map(|t| dy[t - 1 - j]).collect()).collect();
    let mut regs: Vec<&[f64]> = vec![&level];
    regs.extend(lags.iter().map(Vec::as_slice));
    let fit = ols_fit(&target, &regs, true)?;
    if !(fit.ssr > 1e-24 * target.iter().map(|v| v * v).sum::<f64>()) {
        return Err(DmError::DegenerateDesign("exact fit in the ADF regression".into()));
    }
    Ok((fit.t_statistics[1], fit.bic))
}

/// ADF t-statistic at a fixed lag `p` on the common sample implied by
/// `max_lags`.
pub fn adf_statistic(y: &Series, p: usize, max_lags: usize) -> Result<f64> {
    if p > max_lags {
        return Err(DmError::InvalidParameter(format!("lag {p} exceeds max_lags {max_lags}")));
    }
    let (v, dy) = prepare(y, max_lags)?;
    Ok(adf_regression(v, &dy, p, max_lags + 1)?.0)
}

fn prepare(y: &Series, max_lags: usize) -> Result<(&[f64], Vec<f64>)> {
    let v = y.values();
    let needed = max_lags + 2 + MIN_USABLE;
    if v.len() < needed {
        return Err(DmError::TooShort { needed, got: v.len() });
    }
    if v.iter().all(|x| *x == v[0]) {
        return Err(DmError::ZeroVariance);
    }
    Ok((v, v.windows(2).map(|w| w[1] - w[0]).collect()))
}

/// ADF test with lag order chosen by BIC over `0..=max_lags` on a common
/// sample (the first `max_lags + 1` observations are dropped for every
/// candidate). `None` uses [`default_max_lags`].
pub fn adf_test(y: &Series, max_lags: Option<usize>) -> Result<AdfResult> {
    let max_lags = max_lags.unwrap_or_else(|| default_max_lags(y.len()));
    let (v, dy) = prepare(y, max_lags)?;
    let start = max_lags + 1;
    let fits: Vec<(f64, f64)> = (0..=max_lags).map(|p| adf_regression(v, &dy, p, start)).collect::<Result<_>>()?;
    let (selected_lags, &(statistic, _)) = fits
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("at least one candidate");
    Ok(AdfResult {
        statistic,
        selected_lags,
        max_lags,
        nobs: v.len() - start,
        bic: fits.iter().map(|f| f.1).collect(),
        cv_10: ADF_CV_10,
        cv_5: ADF_CV_5,
        reject_10: statistic < ADF_CV_10,
        reject_5: statistic < ADF_CV_5,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdfVerification {
    pub replications: usize,
    pub len: usize,
    pub seed: u64,
    pub simulated_10: f64,
    pub simulated_5: f64,
    pub max_abs_diff: f64,
}

/// Simulates the Dickey–Fuller t-statistic (intercept, no lags) on
/// Gaussian random walks and compares its 10% and 5% quantiles with the
/// embedded critical values.
pub fn verify_critical_values(replications: usize, len: usize, seed: u64) -> Result<AdfVerification> {
    if replications == 0 {
        return Err(DmError::InvalidParameter("replications must be ≥ 1".into()));
    }
    let stream = SeedStream::new(seed);
    let mut stats: Vec<f64> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.rng(r);
            let mut acc = 0.0;
            let y: Vec<f64> = (0..len)
                .map(|_| {
                    acc += rng.sample::<f64, _>(StandardNormal);
                    acc
                })
                .collect();
            adf_statistic(&Series::new(y)?, 0, 0)
        })
        .collect::<Result<_>>()?;
    stats.sort_by(f64::total_cmp);
    let simulated_10 = quantile_sorted(&stats, 0.10);
    let simulated_5 = quantile_sorted(&stats, 0.05);
    Ok(AdfVerification {
        replications,
        len,
        seed,
        simulated_10,
        simulated_5,
        max_abs_diff: (simulated_10 - ADF_CV_10).abs().max((simulated_5 - ADF_CV_5).abs()),
    })
}
