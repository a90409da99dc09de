//! Monte Carlo rejection frequencies of the DM tests.
//!
//! A design point is a (sample size, φ or c) pair. All bandwidth rules of a
//! design point are evaluated on the same simulated loss differentials, and
//! replication `r` of design point `k` draws from the seed stream
//! `(seed, k, r)`, so tables are bit-identical for any thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::BandwidthRule;
use crate::dgp::{simulate_near_unit_with, simulate_regression_dgp_with, NearUnitConfig, RegressionDgpConfig};
use crate::dm::{critical_value, CriticalValueTable, CvRegimeKind, ReferenceLaw};
use crate::error::{DmError, Result};
use crate::limit::default_fixed_b_table;
use crate::rng::SeedStream;
use crate::series::{autocov_demeaned, LossDifferential};
use crate::spectral::{bartlett_from_acov, periodogram, Estimator};

/// φ grid of the predictive-regression experiments.
pub const PAPER_PHI: [f64; 9] = [0.0, 0.5, 0.75, 0.8, 0.85, 0.9, 0.95, 0.975, 0.99];
pub const DEFAULT_REPLICATIONS: usize = 10_000;

/// Intercept choice in the regression design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSpec {
    /// `δ = 0`, `E d_t = 0`.
    Size,
    /// `E d_t = −1`.
    Power,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpSpec {
    /// Predictive regression; the design parameter is φ.
    Regression { sigma_eps2: f64, sigma_u2: f64, delta: DeltaSpec },
    /// Near-unit-root AR(1); the design parameter is c.
    NearUnit { mu: f64, md_exponent: f64, innovation_sd: f64, y0: f64 },
}

impl DgpSpec {
    pub fn regression(delta: DeltaSpec) -> Self {
        DgpSpec::Regression { sigma_eps2: 1.0, sigma_u2: 1.0, delta }
    }

    pub fn near_unit(md_exponent: f64) -> Self {
        DgpSpec::NearUnit { mu: 0.0, md_exponent, innovation_sd: 1.0, y0: 0.0 }
    }

    pub fn param_name(&self) -> &'static str {
        match self {
            DgpSpec::Regression { .. } => "phi",
            DgpSpec::NearUnit { .. } => "c",
        }
    }

    fn design(&self, len: usize, param: f64) -> Result<Design> {
        match *self {
            DgpSpec::Regression { sigma_eps2, sigma_u2, delta } => {
                let base = RegressionDgpConfig { phi: param, sigma_eps2, sigma_u2, delta: 0.0, len };
                let delta = match delta {
                    DeltaSpec::Size => 0.0,
                    DeltaSpec::Fixed(v) => v,
                    DeltaSpec::Power => {
                        let s2 = base.stationary_variance();
                        if s2 < 1.0 {
                            return Err(DmError::InvalidParameter(
                                "power δ needs σ_ε²/(1 − φ²) ≥ 1".into(),
                            ));
                        }
                        -s2.sqrt() + (s2 - 1.0).sqrt()
                    }
                };
                let cfg = RegressionDgpConfig { delta, ..base };
                cfg.validate()?;
                Ok(Design::Regression(cfg))
            }
            DgpSpec::NearUnit { mu, md_exponent, innovation_sd, y0 } => {
                let cfg = NearUnitConfig { mu, c: param, md_exponent, len, innovation_sd, y0 };
                cfg.validate()?;
                Ok(Design::NearUnit(cfg))
            }
        }
    }
}

enum Design {
    Regression(RegressionDgpConfig),
    NearUnit(NearUnitConfig),
}

impl Design {
    fn draw(&self, stream: &SeedStream, rep: u64) -> Result<LossDifferential> {
        let mut rng = stream.rng(rep);
        match self {
            Design::Regression(c) => simulate_regression_dgp_with(c, &mut rng),
            Design::NearUnit(c) => Ok(LossDifferential::from_series(simulate_near_unit_with(c, &mut rng)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dgp: DgpSpec,
    pub lens: Vec<usize>,
    /// φ for the regression design, c for the near-unit design.
    pub params: Vec<f64>,
    pub bandwidths: Vec<BandwidthRule>,
    pub estimator: Estimator,
    pub cv_regime: CvRegimeKind,
    pub level: f64,
    pub replications: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Bartlett/fixed-b size experiment over the paper's grid.
    pub fn weighted_autocovariance(lens: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self {
            dgp: DgpSpec::regression(DeltaSpec::Size),
            lens,
            params: PAPER_PHI.to_vec(),
            bandwidths: vec![
                BandwidthRule::power(1, 4),
                BandwidthRule::power(2, 9),
                BandwidthRule::power(1, 3),
                BandwidthRule::power(1, 2),
                BandwidthRule::FULL,
            ],
            estimator: Estimator::BartlettAutocov,
            cv_regime: CvRegimeKind::FixedB,
            level: 0.05,
            replications,
            seed,
        }
    }

    /// Daniell/fixed-m size experiment over the paper's grid.
    pub fn weighted_periodogram(lens: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self {
            bandwidths: vec![
                BandwidthRule::ONE,
                BandwidthRule::power(1, 4),
                BandwidthRule::power(1, 3),
                BandwidthRule::power(1, 2),
                BandwidthRule::power(2, 3),
            ],
            estimator: Estimator::DaniellPeriodogram,
            cv_regime: CvRegimeKind::FixedMT,
            ..Self::weighted_autocovariance(lens, replications, seed)
        }
    }

    /// Table preset by number: 1 = weighted autocovariances, 2 = weighted
    /// periodogram.
    pub fn paper_table(table: u8, lens: Vec<usize>, replications: usize, seed: u64) -> Result<Self> {
        match table {
            1 => Ok(Self::weighted_autocovariance(lens, replications, seed)),
            2 => Ok(Self::weighted_periodogram(lens, replications, seed)),
            t => Err(DmError::InvalidParameter(format!("unknown table {t}; expected 1 or 2"))),
        }
    }

    pub fn with_delta(mut self, delta: DeltaSpec) -> Self {
        if let DgpSpec::Regression { delta: d, .. } = &mut self.dgp {
            *d = delta;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(DmError::InvalidParameter("replications must be ≥ 1".into()));
        }
        if self.lens.is_empty() || self.params.is_empty() || self.bandwidths.is_empty() {
            return Err(DmError::InvalidParameter("empty sample-size, parameter or bandwidth list".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(DmError::UnsupportedLevel(self.level));
        }
        match (self.estimator, self.cv_regime) {
            (Estimator::BartlettAutocov, CvRegimeKind::FixedMT) => {
                return Err(DmError::InvalidParameter("fixed-m critical values apply to the Daniell estimator".into()))
            }
            (Estimator::DaniellPeriodogram, CvRegimeKind::FixedB) => {
                return Err(DmError::InvalidParameter("fixed-b critical values apply to the Bartlett estimator".into()))
            }
            _ => {}
        }
        for &len in &self.lens {
            if len < 4 {
                return Err(DmError::TooShort { needed: 4, got: len });
            }
            for rule in &self.bandwidths {
                self.bandwidth(rule, len)?;
            }
            for &p in &self.params {
                self.dgp.design(len, p)?;
            }
        }
        Ok(())
    }

    fn bandwidth(&self, rule: &BandwidthRule, len: usize) -> Result<usize> {
        let bw = rule.evaluate(len);
        let max = match self.estimator {
            Estimator::BartlettAutocov => len,
            Estimator::DaniellPeriodogram => len / 2,
        };
        if bw == 0 || bw > max {
            return Err(DmError::BandwidthOutOfRange { bandwidth: bw, max });
        }
        Ok(bw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub len: usize,
    pub param: f64,
    pub rule: BandwidthRule,
    pub bandwidth: usize,
    pub critical_value: f64,
    pub rejections: usize,
    /// Replications whose long-run variance was numerically zero; these
    /// count as non-rejections.
    pub degenerate: usize,
    pub rejection: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub spec: ExperimentSpec,
    /// Ordered by sample size, then bandwidth rule, then parameter.
    pub cells: Vec<Cell>,
}

/// Binomial Monte Carlo standard error.
pub fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// `3·SE_a + 3·SE_b` for comparing two Monte Carlo frequencies.
pub fn comparison_tolerance(p_a: f64, reps_a: usize, p_b: f64, reps_b: usize) -> f64 {
    3.0 * binomial_se(p_a, reps_a) + 3.0 * binomial_se(p_b, reps_b)
}

impl RejectionTable {
    pub fn cell(&self, len: usize, param: f64, rule: BandwidthRule) -> Option<&Cell> {
        self.cells.iter().find(|c| c.len == len && c.rule == rule && (c.param - param).abs() < 1e-12)
    }

    /// Wide layout: one row per (T, bandwidth rule), one rejection and one
    /// SE column per parameter value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let pname = self.spec.dgp.param_name();
        let mut header = vec!["T".to_string(), "rule".to_string(), "bandwidth".to_string(), "cv".to_string()];
        for p in &self.spec.params {
            header.push(format!("{pname}={p}"));
            header.push(format!("se_{pname}={p}"));
        }
        wr.write_record(&header)?;
        for &len in &self.spec.lens {
            for rule in &self.spec.bandwidths {
                let mut row = Vec::with_capacity(header.len());
                let mut first = true;
                for &p in &self.spec.params {
                    let c = self.cell(len, p, *rule).expect("complete table");
                    if first {
                        row.extend([len.to_string(), rule.to_string(), c.bandwidth.to_string(), format!("{:.6}", c.critical_value)]);
                        first = false;
                    }
                    row.push(format!("{:.4}", c.rejection));
                    row.push(format!("{:.4}", c.se));
                }
                wr.write_record(&row)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// `|DM|` for each bandwidth on one draw; `None` marks a degenerate
/// long-run variance.
fn abs_statistics(d: &LossDifferential, estimator: Estimator, bandwidths: &[usize]) -> Result<Vec<Option<f64>>> {
    let n = d.len() as f64;
    let mean = d.mean();
    let scale = d.values().iter().map(|v| v * v).sum::<f64>() / n;
    let lrvs: Vec<f64> = match estimator {
        Estimator::BartlettAutocov => {
            let dm = d.series.demeaned();
            let max = bandwidths.iter().copied().max().unwrap_or(1);
            let acov: Vec<f64> = (0..max.min(dm.len())).map(|l| autocov_demeaned(&dm, l)).collect();
            bandwidths.iter().map(|&m| bartlett_from_acov(&acov, m)).collect()
        }
        Estimator::DaniellPeriodogram => {
            let pg = periodogram(&d.series)?;
            bandwidths.iter().map(|&m| pg.daniell(m).map(|e| e.value)).collect::<Result<_>>()?
        }
    };
    Ok(lrvs
        .into_iter()
        .map(|v| (v > 1e-12 * scale && v > 0.0).then(|| (n.sqrt() * mean / v.sqrt()).abs()))
        .collect())
}

fn law(estimator: Estimator, regime: CvRegimeKind, bandwidth: usize, len: usize) -> ReferenceLaw {
    match (regime, estimator) {
        (CvRegimeKind::StandardNormal, _) => ReferenceLaw::StandardNormal,
        (CvRegimeKind::FixedMT, _) => ReferenceLaw::FixedMT { m: bandwidth },
        (CvRegimeKind::FixedB, _) => ReferenceLaw::FixedB { b: bandwidth as f64 / len as f64 },
    }
}

/// Runs the experiment, loading the default fixed-b table if needed.
pub fn run_rejection_table(spec: &ExperimentSpec) -> Result<RejectionTable> {
    spec.validate()?;
    let table = match spec.cv_regime {
        CvRegimeKind::FixedB => Some(default_fixed_b_table()?),
        _ => None,
    };
    run_rejection_table_with(spec, table)
}

pub fn run_rejection_table_with(spec: &ExperimentSpec, fixed_b: Option<&CriticalValueTable>) -> Result<RejectionTable> {
    spec.validate()?;
    let master = SeedStream::new(spec.seed);
    let mut cells = Vec::new();
    for (li, &len) in spec.lens.iter().enumerate() {
        let bws: Vec<usize> = spec.bandwidths.iter().map(|r| spec.bandwidth(r, len)).collect::<Result<_>>()?;
        let cvs: Vec<f64> = bws
            .iter()
            .map(|&bw| critical_value(law(spec.estimator, spec.cv_regime, bw, len), spec.level, fixed_b))
            .collect::<Result<_>>()?;
        let mut per_param = Vec::with_capacity(spec.params.len());
        for (pi, &param) in spec.params.iter().enumerate() {
            let design = spec.dgp.design(len, param)?;
            let stream = master.child((li * spec.params.len() + pi) as u64);
            let outcomes: Vec<Vec<Option<f64>>> = (0..spec.replications as u64)
                .into_par_iter()
                .map(|r| abs_statistics(&design.draw(&stream, r)?, spec.estimator, &bws))
                .collect::<Result<_>>()?;
            per_param.push(outcomes);
        }
        for (ri, rule) in spec.bandwidths.iter().enumerate() {
            for (pi, &param) in spec.params.iter().enumerate() {
                let (mut rej, mut deg) = (0, 0);
                for o in &per_param[pi] {
                    match o[ri] {
                        Some(s) if s > cvs[ri] => rej += 1,
                        Some(_) => {}
                        None => deg += 1,
                    }
                }
                let p = rej as f64 / spec.replications as f64;
                cells.push(Cell {
                    len,
                    param,
                    rule: *rule,
                    bandwidth: bws[ri],
                    critical_value: cvs[ri],
                    rejections: rej,
                    degenerate: deg,
                    rejection: p,
                    se: binomial_se(p, spec.replications),
                });
            }
        }
    }
    Ok(RejectionTable { spec: spec.clone(), cells })
}
