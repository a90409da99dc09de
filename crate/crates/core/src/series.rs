//! Series arithmetic shared by every other module: loss differentials,
//! moments, autocovariances and a small least-squares kernel.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DmError, Result};

/// A finite, non-empty real-valued time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series(Vec<f64>);

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(DmError::TooShort { needed: 1, got: 0 });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DmError::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn mean(&self) -> f64 {
        mean(&self.0)
    }

    pub(crate) fn require_len(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            Err(DmError::TooShort { needed, got: self.len() })
        } else {
            Ok(())
        }
    }

    /// Deviations from the sample mean.
    pub fn demeaned(&self) -> Vec<f64> {
        let m = self.mean();
        self.0.iter().map(|v| v - m).collect()
    }

    /// Biased (divisor T) variance, equal to the lag-0 autocovariance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.0.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }

    /// Sample standard deviation with divisor T - 1.
    pub fn std_dev(&self) -> f64 {
        if self.len() < 2 {
            return f64::NAN;
        }
        let m = self.mean();
        let ss: f64 = self.0.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (self.len() - 1) as f64).sqrt()
    }

    pub fn median(&self) -> f64 {
        let mut v = self.0.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    /// `γ̂_l / γ̂_0`; NaN for a constant series.
    pub fn autocorrelation(&self, lag: usize) -> Result<f64> {
        let g0 = sample_autocovariance(self, 0)?;
        let gl = sample_autocovariance(self, lag)?;
        Ok(gl / g0)
    }

    pub fn scaled(&self, k: f64) -> Series {
        Series(self.0.iter().map(|v| v * k).collect())
    }

    pub fn shifted(&self, a: f64) -> Series {
        Series(self.0.iter().map(|v| v + a).collect())
    }
}

impl TryFrom<Vec<f64>> for Series {
    type Error = DmError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Series::new(v)
    }
}

impl TryFrom<&[f64]> for Series {
    type Error = DmError;

    fn try_from(v: &[f64]) -> Result<Self> {
        Series::new(v.to_vec())
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Quadratic,
}

impl LossKind {
    pub fn loss(self, error: f64) -> f64 {
        match self {
            LossKind::Quadratic => error * error,
        }
    }
}

/// `d_t = L(e_benchmark,t) - L(e_candidate,t)`: positive values favour the
/// candidate forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDifferential {
    pub series: Series,
    pub loss_kind: LossKind,
    pub sign_convention: String,
}

pub const BENCHMARK_MINUS_CANDIDATE: &str = "benchmark_minus_candidate";

impl LossDifferential {
    /// Wrap an already-computed differential series.
    pub fn from_series(series: Series) -> Self {
        Self {
            series,
            loss_kind: LossKind::Quadratic,
            sign_convention: BENCHMARK_MINUS_CANDIDATE.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        self.series.values()
    }

    pub fn mean(&self) -> f64 {
        self.series.mean()
    }
}

/// Loss differential between benchmark errors `e1` and candidate errors `e2`.
pub fn loss_differential(e1: &Series, e2: &Series, loss_kind: LossKind) -> Result<LossDifferential> {
    if e1.len() != e2.len() {
        return Err(DmError::LengthMismatch { left: e1.len(), right: e2.len() });
    }
    e1.require_len(2)?;
    let d = e1
        .values()
        .iter()
        .zip(e2.values())
        .map(|(a, b)| loss_kind.loss(*a) - loss_kind.loss(*b))
        .collect();
    Ok(LossDifferential {
        series: Series::new(d)?,
        loss_kind,
        sign_convention: BENCHMARK_MINUS_CANDIDATE.to_string(),
    })
}

/// `γ̂_l = T⁻¹ Σ_{t=l+1}^{T} (d_t − d̄)(d_{t−l} − d̄)`, divisor T at every lag.
pub fn sample_autocovariance(d: &Series, lag: usize) -> Result<f64> {
    if lag >= d.len() {
        return Err(DmError::LagOutOfRange { lag, len: d.len() });
    }
    let dm = d.demeaned();
    Ok(autocov_demeaned(&dm, lag))
}

pub(crate) fn autocov_demeaned(dm: &[f64], lag: usize) -> f64 {
    let n = dm.len();
    dm[lag..].iter().zip(&dm[..n - lag]).map(|(a, b)| a * b).sum::<f64>() / n as f64
}

/// Result of an ordinary least squares regression.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first when requested, then regressors in the given order.
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `SSR / (n - k)`.
    pub residual_variance: f64,
    pub ssr: f64,
    /// `n ln(SSR/n) + k ln n`; `-inf` for an exact fit.
    pub bic: f64,
    pub t_statistics: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub nobs: usize,
}

/// Least squares of `y` on `regressors` (plus a constant column when
/// `include_intercept`). Solved by Householder QR.
pub fn ols_fit(y: &[f64], regressors: &[&[f64]], include_intercept: bool) -> Result<OlsFit> {
    let n = y.len();
    for r in regressors {
        if r.len() != n {
            return Err(DmError::LengthMismatch { left: n, right: r.len() });
        }
    }
    let k = regressors.len() + usize::from(include_intercept);
    if k == 0 {
        return Err(DmError::DegenerateDesign("no regressors".into()));
    }
    if n <= k {
        return Err(DmError::TooShort { needed: k + 1, got: n });
    }
    if let Some(index) = y.iter().position(|v| !v.is_finite()) {
        return Err(DmError::NonFinite { index });
    }

    let x = DMatrix::from_fn(n, k, |i, j| {
        if include_intercept {
            if j == 0 { 1.0 } else { regressors[j - 1][i] }
        } else {
            regressors[j][i]
        }
    });
    let col_norms: Vec<f64> = (0..k).map(|j| x.column(j).norm()).collect();
    if let Some(j) = col_norms.iter().position(|c| *c == 0.0 || !c.is_finite()) {
        return Err(DmError::DegenerateDesign(format!("column {j} is zero or non-finite")));
    }
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)].abs() <= 1e-10 * col_norms[j] {
            return Err(DmError::DegenerateDesign(format!(
                "column {j} is collinear with the preceding columns"
            )));
        }
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| DmError::DegenerateDesign("singular triangular factor".into()))?;
    let resid = &yv - &x * &beta;
    let ssr = resid.norm_squared();
    let dof = (n - k) as f64;
    let s2 = ssr / dof;
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| DmError::DegenerateDesign("singular triangular factor".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let standard_errors: Vec<f64> = (0..k).map(|j| (s2 * xtx_inv[(j, j)]).sqrt()).collect();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let t_statistics = coefficients.iter().zip(&standard_errors).map(|(b, s)| b / s).collect();
    let nf = n as f64;
    Ok(OlsFit {
        coefficients,
        residuals: resid.iter().copied().collect(),
        residual_variance: s2,
        ssr,
        bic: nf * (ssr / nf).ln() + k as f64 * nf.ln(),
        t_statistics,
        standard_errors,
        nobs: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s(v: &[f64]) -> Series {
        Series::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_forecasts_give_zero_differential() {
        let e = s(&[0.3, -1.2, 2.5, 0.0]);
        let d = loss_differential(&e, &e, LossKind::Quadratic).unwrap();
        assert!(d.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hand_computed_differential() {
        let d = loss_differential(&s(&[1.0, -1.0]), &s(&[2.0, 0.0]), LossKind::Quadratic).unwrap();
        assert_eq!(d.values(), &[-3.0, 1.0]);
        assert_eq!(d.sign_convention, BENCHMARK_MINUS_CANDIDATE);
    }

    #[test]
    fn larger_benchmark_errors_give_positive_differential() {
        let bench = s(&[2.0, -3.0, 1.5, -0.8]);
        let cand = s(&[1.0, 2.5, -1.0, 0.5]);
        let d = loss_differential(&bench, &cand, LossKind::Quadratic).unwrap();
        assert!(d.values().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn differential_errors() {
        assert!(matches!(
            loss_differential(&s(&[1.0, 2.0]), &s(&[1.0, 2.0, 3.0]), LossKind::Quadratic),
            Err(DmError::LengthMismatch { .. })
        ));
        assert!(matches!(Series::new(vec![1.0, f64::NAN]), Err(DmError::NonFinite { index: 1 })));
    }

    #[test]
    fn autocovariance_hand_values() {
        let d = s(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(sample_autocovariance(&d, 1).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sample_autocovariance(&d, 0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        let d4 = s(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(sample_autocovariance(&d4, 1).unwrap(), 0.3125, epsilon = 1e-15);
        assert!(matches!(sample_autocovariance(&d, 3), Err(DmError::LagOutOfRange { .. })));
    }

    #[test]
    fn ols_identity_fit() {
        let x = [1.0, 2.0, 5.0, 7.0];
        let fit = ols_fit(&x, &[&x], true).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 1.0, epsilon = 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn ols_hand_fit() {
        let fit = ols_fit(&[1.0, 2.0, 2.0, 3.0], &[&[1.0, 2.0, 3.0, 4.0]], true).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 0.6, epsilon = 1e-12);
        // SSR = 0.2 on n = 4, k = 2
        assert_abs_diff_eq!(fit.ssr, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.bic, 4.0 * (0.05f64).ln() + 2.0 * 4.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn ols_constant_regressor_is_degenerate() {
        let r = ols_fit(&[1.0, 2.0, 3.0, 4.0], &[&[2.0, 2.0, 2.0, 2.0]], true);
        assert!(matches!(r, Err(DmError::DegenerateDesign(_))));
    }

    proptest! {
        #[test]
        fn autocovariance_bounds(v in prop::collection::vec(-100.0f64..100.0, 2..60), lag in 0usize..60) {
            let d = Series::new(v).unwrap();
            let g0 = sample_autocovariance(&d, 0).unwrap();
            prop_assert!(g0 >= 0.0);
            prop_assert!((g0 - d.variance()).abs() <= 1e-9 * (1.0 + g0));
            if lag < d.len() {
                let gl = sample_autocovariance(&d, lag).unwrap();
                prop_assert!(gl.abs() <= g0 * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn differential_antisymmetric(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..40)) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let (a, b) = (Series::new(a).unwrap(), Series::new(b).unwrap());
            let ab = loss_differential(&a, &b, LossKind::Quadratic).unwrap();
            let ba = loss_differential(&b, &a, LossKind::Quadratic).unwrap();
            for (x, y) in ab.values().iter().zip(ba.values()) {
                prop_assert_eq!(*x, -*y);
            }
        }

        #[test]
        fn ols_residuals_orthogonal(
            pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 8..50)
        ) {
            let y: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let x1: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let x2: Vec<f64> = pts.iter().map(|p| p.2).collect();
            if let Ok(fit) = ols_fit(&y, &[&x1, &x2], true) {
                let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                for x in [&x1, &x2] {
                    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let ip: f64 = fit.residuals.iter().zip(x.iter()).map(|(r, v)| r * v).sum();
                    prop_assert!(ip.abs() <= 1e-8 * ny * nx + 1e-12);
                }
                prop_assert!(fit.residuals.iter().sum::<f64>().abs() <= 1e-8 * ny * (y.len() as f64).sqrt());
                prop_assert!(fit.residual_variance >= 0.0);
            }
        }
    }
}
