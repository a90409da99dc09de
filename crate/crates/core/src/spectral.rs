//! Long-run variance estimation: the periodogram at the Fourier
//! frequencies, the Bartlett weighted-autocovariance estimator and the
//! Daniell weighted-periodogram estimator.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{DmError, Result};
use crate::series::{autocov_demeaned, Series};

/// Series longer than this use the FFT by default.
pub const FFT_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeriodogramMethod {
    /// Direct summation up to [`FFT_THRESHOLD`], FFT above.
    #[default]
    Auto,
    Direct,
    Fast,
}

/// Periodogram ordinates `I(λ_j)`, `λ_j = 2πj/T`, for `j = 1..=⌊T/2⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    ordinates: Vec<f64>,
    len: usize,
}

impl Periodogram {
    /// `ordinates()[j - 1]` is `I(λ_j)`.
    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    /// Length T of the underlying series.
    pub fn series_len(&self) -> usize {
        self.len
    }

    pub fn frequency(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len as f64
    }

    /// Daniell estimate `(2π/m) Σ_{j=1}^{m} I(λ_j)`.
    pub fn daniell(&self, m: usize) -> Result<LrvEstimate> {
        if m == 0 || m > self.ordinates.len() {
            return Err(DmError::BandwidthOutOfRange { bandwidth: m, max: self.ordinates.len() });
        }
        let sum: f64 = self.ordinates[..m].iter().sum();
        Ok(LrvEstimate {
            value: 2.0 * PI * sum / m as f64,
            estimator: Estimator::DaniellPeriodogram,
            bandwidth: m,
            len: self.len,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    BartlettAutocov,
    DaniellPeriodogram,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::BartlettAutocov => "bartlett_autocov",
            Estimator::DaniellPeriodogram => "daniell_periodogram",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrvEstimate {
    pub value: f64,
    pub estimator: Estimator,
    /// M for Bartlett, m for Daniell.
    pub bandwidth: usize,
    pub len: usize,
}

pub fn periodogram(d: &Series) -> Result<Periodogram> {
    periodogram_with(d, PeriodogramMethod::Auto)
}

pub fn periodogram_with(d: &Series, method: PeriodogramMethod) -> Result<Periodogram> {
    d.require_len(2)?;
    let x = d.demeaned();
    let fast = match method {
        PeriodogramMethod::Auto => x.len() > FFT_THRESHOLD,
        PeriodogramMethod::Direct => false,
        PeriodogramMethod::Fast => true,
    };
    let ordinates = if fast { fft_ordinates(&x) } else { direct_ordinates(&x, x.len() / 2) };
    Ok(Periodogram { ordinates, len: x.len() })
}

/// First `count` ordinates by direct summation, `O(T·count)`.
pub(crate) fn direct_ordinates(x: &[f64], count: usize) -> Vec<f64> {
    let n = x.len();
    let (cos, sin): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .unzip();
    let scale = 1.0 / (2.0 * PI * n as f64);
    (1..=count)
        .map(|j| {
            let (mut re, mut im) = (0.0, 0.0);
            let mut idx = j % n;
            for &v in x {
                // index of λ_j·t for t = 1..T, reduced mod T
                re += v * cos[idx];
                im += v * sin[idx];
                idx += j;
                if idx >= n {
                    idx -= n;
                }
            }
            (re * re + im * im) * scale
        })
        .collect()
}

fn fft_ordinates(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (2.0 * PI * n as f64);
    buf[1..=n / 2].iter().map(|c| c.norm_sqr() * scale).collect()
}

/// Bartlett estimate `γ̂_0 + 2 Σ_{l=1}^{M} ((M − l)/M) γ̂_l`.
pub fn lrv_bartlett(d: &Series, bandwidth: usize) -> Result<LrvEstimate> {
    d.require_len(2)?;
    let dm = d.demeaned();
    bartlett_demeaned(&dm, bandwidth)
}

pub(crate) fn bartlett_demeaned(dm: &[f64], bandwidth: usize) -> Result<LrvEstimate> {
    let n = dm.len();
    if bandwidth == 0 || bandwidth > n {
        return Err(DmError::BandwidthOutOfRange { bandwidth, max: n });
    }
    let mf = bandwidth as f64;
    // the l = M term carries zero weight
    let value = autocov_demeaned(dm, 0)
        + 2.0
            * (1..bandwidth.min(n))
                .map(|l| (mf - l as f64) / mf * autocov_demeaned(dm, l))
                .sum::<f64>();
    Ok(LrvEstimate { value, estimator: Estimator::BartlettAutocov, bandwidth, len: n })
}

/// Autocovariances `γ̂_0..=γ̂_max_lag` of an already demeaned series via a
/// zero-padded FFT, `O(T log T)`.
pub(crate) fn autocovariances_fft(dm: &[f64], max_lag: usize) -> Vec<f64> {
    let n = dm.len();
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = dm.iter().map(|v| Complex::new(*v, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / (size as f64 * n as f64);
    buf[..=max_lag.min(n - 1)].iter().map(|c| c.re * scale).collect()
}

/// Bartlett estimate from precomputed autocovariances (`acov[l] = γ̂_l`).
pub(crate) fn bartlett_from_acov(acov: &[f64], bandwidth: usize) -> f64 {
    let mf = bandwidth as f64;
    acov[0]
        + 2.0
            * acov
                .iter()
                .enumerate()
                .take(bandwidth)
                .skip(1)
                .map(|(l, g)| (mf - l as f64) / mf * g)
                .sum::<f64>()
}

/// Daniell estimate `(2π/m) Σ_{j=1}^{m} I(λ_j)`.
pub fn lrv_daniell(d: &Series, bandwidth: usize) -> Result<LrvEstimate> {
    d.require_len(2)?;
    let max = d.len() / 2;
    if bandwidth == 0 || bandwidth > max {
        return Err(DmError::BandwidthOutOfRange { bandwidth, max });
    }
    periodogram(d)?.daniell(bandwidth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn s(v: &[f64]) -> Series {
        Series::new(v.to_vec()).unwrap()
    }

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = SeedStream::new(seed).rng(0);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    /// Textbook summation straight from the definition, no demeaning and no
    /// twiddle table.
    fn oracle_periodogram(d: &[f64]) -> Vec<f64> {
        let n = d.len() as f64;
        (1..=d.len() / 2)
            .map(|j| {
                let lam = 2.0 * PI * j as f64 / n;
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in d.iter().enumerate() {
                    let a = lam * (t + 1) as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                (re * re + im * im) / (2.0 * PI * n)
            })
            .collect()
    }

    #[test]
    fn constant_series_has_zero_ordinates() {
        let p = periodogram(&s(&[3.5; 12])).unwrap();
        assert!(p.ordinates().iter().all(|v| v.abs() < 1e-28));
        assert!(lrv_daniell(&s(&[3.5; 12]), 4).unwrap().value.abs() < 1e-27);
    }

    #[test]
    fn hand_computed_values() {
        let d = s(&[1.0, 2.0, 3.0, 4.0]);
        let p = periodogram(&d).unwrap();
        assert_relative_eq!(p.ordinates()[0], 1.0 / PI, max_relative = 1e-12);
        assert_relative_eq!(lrv_bartlett(&d, 2).unwrap().value, 1.5625, max_relative = 1e-12);
        assert_relative_eq!(lrv_daniell(&d, 1).unwrap().value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn bartlett_unit_bandwidth_is_variance() {
        let d = s(&normals(3, 37));
        assert_relative_eq!(lrv_bartlett(&d, 1).unwrap().value, d.variance(), max_relative = 1e-14);
    }

    #[test]
    fn fast_matches_direct() {
        for n in [7, 64, 257, 300, 1001] {
            let d = s(&normals(n as u64, n));
            let a = periodogram_with(&d, PeriodogramMethod::Direct).unwrap();
            let b = periodogram_with(&d, PeriodogramMethod::Fast).unwrap();
            for (x, y) in a.ordinates().iter().zip(b.ordinates()) {
                assert_relative_eq!(x, y, max_relative = 1e-8, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn daniell_matches_oracle_on_ar1() {
        let e = normals(11, 500);
        let mut y = vec![0.0; 500];
        for t in 1..500 {
            y[t] = 0.7 * y[t - 1] + e[t];
        }
        let m = 7; // ⌊500^{1/3}⌋
        let oracle = 2.0 * PI / m as f64 * oracle_periodogram(&y)[..m].iter().sum::<f64>();
        let got = lrv_daniell(&s(&y), m).unwrap().value;
        assert!((got - oracle).abs() <= 1e-10 * oracle.abs());
    }

    #[test]
    fn fft_autocovariances_match_direct() {
        let d = s(&normals(21, 333));
        let dm = d.demeaned();
        let fast = autocovariances_fft(&dm, 332);
        for l in [0, 1, 5, 100, 332] {
            let direct = crate::series::sample_autocovariance(&d, l).unwrap();
            assert!((fast[l] - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        }
        for m in [1, 7, 333] {
            let a = lrv_bartlett(&d, m).unwrap().value;
            assert!((bartlett_from_acov(&fast, m) - a).abs() < 1e-11);
        }
    }

    #[test]
    fn bartlett_full_bandwidth_nonnegative() {
        for seed in 0..1000 {
            let d = s(&normals(seed, 30));
            assert!(lrv_bartlett(&d, 30).unwrap().value >= 0.0);
        }
    }

    #[test]
    fn bandwidth_range_errors() {
        let d = s(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(lrv_bartlett(&d, 0).is_err());
        assert!(lrv_bartlett(&d, 6).is_err());
        assert!(lrv_bartlett(&d, 5).is_ok());
        assert!(lrv_daniell(&d, 3).is_err());
        assert!(lrv_daniell(&d, 2).is_ok());
        assert!(periodogram(&s(&[1.0])).is_err());
    }

    fn parseval_gap(v: &[f64]) -> f64 {
        let d = s(v);
        let p = periodogram(&d).unwrap();
        let n = v.len();
        let ords = p.ordinates();
        let spectral = if n.is_multiple_of(2) {
            2.0 * ords[..n / 2 - 1].iter().sum::<f64>() + ords[n / 2 - 1]
        } else {
            2.0 * ords.iter().sum::<f64>()
        };
        let ss: f64 = d.demeaned().iter().map(|x| x * x).sum();
        (2.0 * PI * spectral - ss).abs() / ss
    }

    #[test]
    fn parseval_even_and_odd() {
        for n in [8, 9, 64, 255, 256, 257, 512] {
            assert!(parseval_gap(&normals(n as u64 + 100, n)) < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn estimators_scale_and_shift(
            v in prop::collection::vec(-5.0f64..5.0, 8..80),
            k in 0.1f64..10.0,
            a in -100.0f64..100.0,
            frac in 0.0f64..1.0,
        ) {
            let d = Series::new(v).unwrap();
            prop_assume!(d.variance() > 1e-6);
            let mbig = 1 + ((d.len() - 1) as f64 * frac) as usize;
            let msmall = 1 + ((d.len() / 2 - 1) as f64 * frac) as usize;
            let a0 = lrv_bartlett(&d, mbig).unwrap().value;
            let p0 = lrv_daniell(&d, msmall).unwrap().value;
            prop_assert!(a0 >= -1e-12 && p0 >= 0.0);
            let a1 = lrv_bartlett(&d.scaled(k), mbig).unwrap().value;
            let p1 = lrv_daniell(&d.scaled(k), msmall).unwrap().value;
            prop_assert!((a1 - k * k * a0).abs() <= 1e-9 * (k * k * a0.abs() + 1e-9));
            prop_assert!((p1 - k * k * p0).abs() <= 1e-9 * k * k * p0 + 1e-12);
            let a2 = lrv_bartlett(&d.shifted(a), mbig).unwrap().value;
            let p2 = lrv_daniell(&d.shifted(a), msmall).unwrap().value;
            prop_assert!((a2 - a0).abs() <= 1e-8 * (a0.abs() + 1.0));
            prop_assert!((p2 - p0).abs() <= 1e-8 * (p0 + 1.0));
        }

        #[test]
        fn daniell_full_band_parseval_bound(v in prop::collection::vec(-5.0f64..5.0, 4..120)) {
            let d = Series::new(v).unwrap();
            let half = d.len() / 2;
            let ss: f64 = d.demeaned().iter().map(|x| x * x).sum();
            let p = lrv_daniell(&d, half).unwrap().value;
            prop_assert!(p <= 2.0 / half as f64 * ss * (1.0 + 1e-10) + 1e-12);
        }
    }
}
