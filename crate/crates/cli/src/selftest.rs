//! Hand-computable checks run by `dmkit selftest`.

use std::f64::consts::PI;

use dmkit::dgp::{expected_loss_diff, NearUnitConfig, RegressionDgpConfig};
use dmkit::dm::{critical_value, ReferenceLaw};
use dmkit::empirical::{to_quarterly_yoy, Aggregation, Growth, MonthlySeries, YearMonth};
use dmkit::{dm_a, dm_p, lrv_bartlett, lrv_daniell, periodogram, BandwidthRule, CvRegime, LossDifferential, Series};

pub struct Check {
    pub name: &'static str,
    pub got: f64,
    pub want: f64,
    pub tol: f64,
}

impl Check {
    pub fn ok(&self) -> bool {
        (self.got - self.want).abs() <= self.tol
    }
}

fn check(name: &'static str, got: f64, want: f64, tol: f64) -> Check {
    Check { name, got, want, tol }
}

pub fn run() -> anyhow::Result<Vec<Check>> {
    let s = Series::new(vec![1.0, 2.0, 3.0, 4.0])?;
    let d = LossDifferential::from_series(s.clone());
    let mut out = vec![
        check("bartlett lrv, d=[1,2,3,4], M=2", lrv_bartlett(&s, 2)?.value, 1.5625, 1e-9),
        check("DM_A, M=2", dm_a(&d, 2, CvRegime::StandardNormal)?.statistic, 4.0, 1e-9),
        check("periodogram I(λ1)", periodogram(&s)?.ordinates()[0], 1.0 / PI, 1e-9),
        check("daniell lrv, m=1", lrv_daniell(&s, 1)?.value, 2.0, 1e-9),
        check("DM_P, m=1", dm_p(&d, 1, CvRegime::FixedM)?.statistic, 12.5f64.sqrt(), 1e-9),
        check(
            "t(2) 97.5% quantile",
            critical_value(ReferenceLaw::FixedMT { m: 1 }, 0.05, None)?,
            0.95 / (2.0f64 * 0.975 * 0.025).sqrt(),
            1e-9,
        ),
        check("normal 97.5% quantile", critical_value(ReferenceLaw::StandardNormal, 0.05, None)?, 1.959963984540054, 1e-9),
    ];
    for (rule, want) in [((2, 9), 2), ((1, 3), 3), ((1, 2), 6), ((1, 1), 44), ((0, 1), 1), ((1, 4), 2), ((2, 3), 12)] {
        let got = BandwidthRule::power(rule.0, rule.1).evaluate(44) as f64;
        out.push(check("bandwidth rule at T=44", got, want as f64, 0.0));
    }
    out.push(check("ρ_T, c=−10, α=1, T=100", NearUnitConfig::local_to_unity(-10.0, 100).rho(), (-0.1f64).exp(), 1e-12));
    out.push(check("ρ_T, c=−1, α=0.5, T=100", NearUnitConfig::moderate(-1.0, 0.5, 100).rho(), 0.9, 1e-12));
    out.push(check("E d, φ=0, α=2", expected_loss_diff(0.0, 1.0, 2.0)?, 3.0, 1e-12));
    out.push(check("E d, δ=0, φ=0.9", RegressionDgpConfig::size(0.9, 50).expected_loss_diff()?, 0.0, 1e-12));
    out.push(check("E d, power δ, φ=0.5", RegressionDgpConfig::power(0.5, 50).expected_loss_diff()?, -1.0, 1e-12));
    let g = 1.01f64.powf(1.0 / 3.0);
    let m = MonthlySeries { start: YearMonth::new(2000, 1)?, values: (0..36).map(|i| 100.0 * g.powi(i)).collect() };
    let yoy = to_quarterly_yoy(&m, Aggregation::Mean, Growth::Simple)?;
    out.push(check("yoy of 1%/quarter growth", yoy.values[0], 100.0 * (1.01f64.powi(4) - 1.0), 1e-9));
    let x = Series::new((0..37).map(|i| ((i * 13) % 7) as f64 - 0.3 * i as f64).collect())?;
    let pg = periodogram(&x)?;
    // Parseval: T·γ̂0 = 2π Σ_{j=1}^{(T−1)/2} 2·I(λ_j) for odd T
    let lhs = x.variance() * 37.0;
    let rhs = 2.0 * PI * 2.0 * pg.ordinates().iter().sum::<f64>();
    out.push(check("Parseval identity, T=37", rhs / lhs, 1.0, 1e-10));
    Ok(out)
}
