//! Data generators: near-unit-root AR(1) loss differentials and the
//! predictive-regression design with a calibrated intercept.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DmError, Result};
use crate::rng::SeedStream;
use crate::series::{LossDifferential, Series};

/// `d_t = μ + y_t`, `y_t = ρ_T y_{t−1} + u_t`, `u_t ~ N(0, sd²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearUnitConfig {
    pub mu: f64,
    /// Non-positive persistence parameter.
    pub c: f64,
    /// `1` selects `ρ_T = e^{c/T}`; values in `[0, 1)` select the moderate
    /// deviation `ρ_T = 1 + c/T^α`.
    pub md_exponent: f64,
    pub len: usize,
    pub innovation_sd: f64,
    pub y0: f64,
}

impl NearUnitConfig {
    /// Local-to-unity design with zero mean, unit innovations and `y_0 = 0`.
    pub fn local_to_unity(c: f64, len: usize) -> Self {
        Self { mu: 0.0, c, md_exponent: 1.0, len, innovation_sd: 1.0, y0: 0.0 }
    }

    pub fn moderate(c: f64, md_exponent: f64, len: usize) -> Self {
        Self { md_exponent, ..Self::local_to_unity(c, len) }
    }

    pub fn rho(&self) -> f64 {
        let t = self.len as f64;
        if self.md_exponent >= 1.0 {
            (self.c / t).exp()
        } else {
            1.0 + self.c / t.powf(self.md_exponent)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c <= 0.0) {
            return Err(DmError::InvalidParameter(format!("c = {} must be ≤ 0", self.c)));
        }
        if !(0.0..=1.0).contains(&self.md_exponent) {
            return Err(DmError::InvalidParameter(format!(
                "moderate-deviation exponent {} outside [0, 1]",
                self.md_exponent
            )));
        }
        if self.len < 2 {
            return Err(DmError::TooShort { needed: 2, got: self.len });
        }
        if !(self.innovation_sd > 0.0) || !self.mu.is_finite() || !self.y0.is_finite() {
            return Err(DmError::InvalidParameter("innovation sd must be positive, mu and y0 finite".into()));
        }
        let rho = self.rho();
        if !(rho > -1.0 && rho <= 1.0) {
            return Err(DmError::InvalidParameter(format!("ρ_T = {rho} outside (−1, 1]")));
        }
        Ok(())
    }
}

pub fn simulate_near_unit(config: &NearUnitConfig, seed: u64) -> Result<Series> {
    simulate_near_unit_with(config, &mut SeedStream::new(seed).rng(0))
}

pub fn simulate_near_unit_with<R: Rng>(config: &NearUnitConfig, rng: &mut R) -> Result<Series> {
    config.validate()?;
    let rho = config.rho();
    let mut y = config.y0;
    let d = (0..config.len)
        .map(|_| {
            let u: f64 = rng.sample(StandardNormal);
            y = rho * y + config.innovation_sd * u;
            config.mu + y
        })
        .collect();
    Series::new(d)
}

/// `y_t = α + x_{t−1} + u_t`, `x_t = φ x_{t−1} + ε_t`, with forecasts at
/// their probability limits: `ŷ₁ = x_{t−1}` (no intercept) and `ŷ₂ = α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionDgpConfig {
    pub phi: f64,
    pub sigma_eps2: f64,
    pub sigma_u2: f64,
    pub delta: f64,
    pub len: usize,
}

impl RegressionDgpConfig {
    /// Null design: `δ = 0`, so `E d_t = 0`.
    pub fn size(phi: f64, len: usize) -> Self {
        Self { phi, sigma_eps2: 1.0, sigma_u2: 1.0, delta: 0.0, len }
    }

    /// Alternative with `E d_t = −1`.
    pub fn power(phi: f64, len: usize) -> Self {
        let s2 = 1.0 / (1.0 - phi * phi);
        Self { delta: -s2.sqrt() + (s2 - 1.0).sqrt(), ..Self::size(phi, len) }
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma_eps2 / (1.0 - self.phi * self.phi)
    }

    /// `α = sqrt(σ_ε²/(1 − φ²)) + δ`.
    pub fn intercept_alpha(&self) -> f64 {
        self.stationary_variance().sqrt() + self.delta
    }

    pub fn expected_loss_diff(&self) -> Result<f64> {
        expected_loss_diff(self.phi, self.sigma_eps2, self.intercept_alpha())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi.abs() < 1.0) {
            return Err(DmError::InvalidParameter(format!("|φ| = {} must be < 1", self.phi.abs())));
        }
        if !(self.sigma_eps2 > 0.0 && self.sigma_u2 > 0.0) {
            return Err(DmError::InvalidParameter("innovation variances must be positive".into()));
        }
        if !self.delta.is_finite() {
            return Err(DmError::InvalidParameter("δ must be finite".into()));
        }
        if self.len < 2 {
            return Err(DmError::TooShort { needed: 2, got: self.len });
        }
        Ok(())
    }
}

/// `E d_t = α² − σ_ε²/(1 − φ²)`.
pub fn expected_loss_diff(phi: f64, sigma_eps2: f64, intercept_alpha: f64) -> Result<f64> {
    if !(phi.abs() < 1.0) {
        return Err(DmError::InvalidParameter(format!("|φ| = {} must be < 1", phi.abs())));
    }
    Ok(intercept_alpha * intercept_alpha - sigma_eps2 / (1.0 - phi * phi))
}

pub fn simulate_regression_dgp(config: &RegressionDgpConfig, seed: u64) -> Result<LossDifferential> {
    simulate_regression_dgp_with(config, &mut SeedStream::new(seed).rng(0))
}

/// `d_t = e_{1,t}² − e_{2,t}²` with `e_1 = α + u_t`, `e_2 = x_{t−1} + u_t`;
/// `x_0` is drawn from the stationary law.
pub fn simulate_regression_dgp_with<R: Rng>(config: &RegressionDgpConfig, rng: &mut R) -> Result<LossDifferential> {
    config.validate()?;
    let alpha = config.intercept_alpha();
    let (sd_eps, sd_u) = (config.sigma_eps2.sqrt(), config.sigma_u2.sqrt());
    let z0: f64 = rng.sample(StandardNormal);
    let mut x_prev = config.stationary_variance().sqrt() * z0;
    let d = (0..config.len)
        .map(|_| {
            let u = sd_u * rng.sample::<f64, _>(StandardNormal);
            let eps = sd_eps * rng.sample::<f64, _>(StandardNormal);
            let e1 = alpha + u;
            let e2 = x_prev + u;
            x_prev = config.phi * x_prev + eps;
            e1 * e1 - e2 * e2
        })
        .collect();
    Ok(LossDifferential::from_series(Series::new(d)?))
}

/// The latent regressor path `x_0..x_{T}` with the same draws as
/// [`simulate_regression_dgp_with`].
pub fn regressor_path<R: Rng>(config: &RegressionDgpConfig, rng: &mut R) -> Result<Vec<f64>> {
    config.validate()?;
    let sd_eps = config.sigma_eps2.sqrt();
    let z0: f64 = rng.sample(StandardNormal);
    let mut x = config.stationary_variance().sqrt() * z0;
    let mut out = Vec::with_capacity(config.len + 1);
    out.push(x);
    for _ in 0..config.len {
        let _u: f64 = rng.sample(StandardNormal);
        let eps: f64 = rng.sample(StandardNormal);
        x = config.phi * x + sd_eps * eps;
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::sample_autocovariance;
    use crate::stats::{mean, variance};
    use approx::assert_abs_diff_eq;
    use rayon::prelude::*;

    #[test]
    fn rho_values() {
        assert_eq!(NearUnitConfig::local_to_unity(0.0, 100).rho(), 1.0);
        assert_abs_diff_eq!(NearUnitConfig::local_to_unity(-10.0, 100).rho(), 0.904837418, epsilon = 1e-9);
        assert_abs_diff_eq!(NearUnitConfig::moderate(-1.0, 0.5, 100).rho(), 0.9, epsilon = 1e-15);
        assert!(NearUnitConfig::moderate(-3.0, 0.0, 100).validate().is_err());
        assert!(NearUnitConfig::local_to_unity(1.0, 100).validate().is_err());
    }

    #[test]
    fn unit_root_increments_are_white() {
        let d = simulate_near_unit(&NearUnitConfig::local_to_unity(0.0, 20_000), 3).unwrap();
        let inc = Series::new(d.values().windows(2).map(|w| w[1] - w[0]).collect()).unwrap();
        assert!((inc.variance() - 1.0).abs() < 0.05);
        assert!(inc.autocorrelation(1).unwrap().abs() < 0.03);
    }

    #[test]
    fn mean_shift_is_exact() {
        let base = NearUnitConfig::local_to_unity(-4.0, 200);
        let shifted = NearUnitConfig { mu: 2.5, ..base };
        let a = simulate_near_unit(&base, 17).unwrap();
        let b = simulate_near_unit(&shifted, 17).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(x + 2.5, *y);
        }
    }

    #[test]
    fn expected_loss_diff_values() {
        let c = RegressionDgpConfig::size(0.9, 100);
        assert_abs_diff_eq!(c.expected_loss_diff().unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(expected_loss_diff(0.0, 1.0, 2.0).unwrap(), 3.0, epsilon = 1e-15);
        for phi in [0.0, 0.5, 0.85, 0.99] {
            assert_abs_diff_eq!(RegressionDgpConfig::power(phi, 50).expected_loss_diff().unwrap(), -1.0, epsilon = 1e-9);
        }
        assert!(expected_loss_diff(1.0, 1.0, 1.0).is_err());
        assert!(RegressionDgpConfig::size(-1.0, 10).validate().is_err());
    }

    fn grand_mean(config: RegressionDgpConfig, reps: u64, seed: u64) -> (f64, f64) {
        let means: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| simulate_regression_dgp_with(&config, &mut SeedStream::new(seed).rng(r)).unwrap().mean())
            .collect();
        (mean(&means), (variance(&means) / reps as f64).sqrt())
    }

    #[test]
    fn regression_dgp_means() {
        for (cfg, target) in [
            (RegressionDgpConfig::size(0.5, 100), 0.0),
            (RegressionDgpConfig::power(0.5, 100), -1.0),
            (RegressionDgpConfig { delta: 1.0, ..RegressionDgpConfig::size(0.0, 100) }, 3.0),
        ] {
            let (m, se) = grand_mean(cfg, 10_000, 31);
            assert!((m - target).abs() < 3.0 * se, "{m} vs {target} (se {se})");
        }
    }

    #[test]
    fn squared_regressor_has_ar_coefficient_phi_squared() {
        let cfg = RegressionDgpConfig::size(0.8, 20_000);
        let x = regressor_path(&cfg, &mut SeedStream::new(8).rng(0)).unwrap();
        let sq = Series::new(x.iter().map(|v| v * v).collect()).unwrap();
        let r1 = sample_autocovariance(&sq, 1).unwrap() / sample_autocovariance(&sq, 0).unwrap();
        assert!((r1 - 0.64).abs() < 0.03, "{r1}");
    }

    #[test]
    fn stationary_initialisation() {
        let cfg = RegressionDgpConfig::size(0.9, 2);
        let x0: Vec<f64> = (0..100_000u64)
            .map(|s| regressor_path(&cfg, &mut SeedStream::new(s).rng(0)).unwrap()[0])
            .collect();
        assert!((variance(&x0) / cfg.stationary_variance() - 1.0).abs() < 0.02);
    }

    #[test]
    fn regressor_path_shares_draws_with_dgp() {
        let cfg = RegressionDgpConfig::size(0.7, 20_000);
        let x = regressor_path(&cfg, &mut SeedStream::new(4).rng(2)).unwrap();
        let d = simulate_regression_dgp_with(&cfg, &mut SeedStream::new(4).rng(2)).unwrap();
        let a = cfg.intercept_alpha();
        // e1² − e2² = (α − x)(α + x + 2u): the implied u must be N(0, 1) and independent of x
        let u: Vec<f64> = (0..cfg.len).map(|t| (d.values()[t] / (a - x[t]) - a - x[t]) / 2.0).collect();
        assert!((variance(&u) - 1.0).abs() < 0.05);
        let xu = mean(&u.iter().zip(&x).map(|(u, x)| u * x).collect::<Vec<_>>());
        assert!(xu.abs() < 0.05, "{xu}");
    }
}
