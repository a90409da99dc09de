//! Summary statistics, loss differentials and DM grids for forecast panels.

use serde::{Deserialize, Serialize};

use super::data::{Quarter, QuarterlySeries};
use super::forecast::{rolling_forecast, Ar1Mode, ForecastPanel, ForecastSpec, Method, DEFAULT_WINDOW, INFLATION_TARGET};
use crate::adf::adf_test;
use crate::bandwidth::BandwidthRule;
use crate::dm::{dm_a, dm_p, stars, CriticalValueTable, CvRegime};
use crate::error::{DmError, Result};
use crate::series::{loss_differential, LossKind, Series};

/// Mean, median, std (divisor n − 1), AC1–AC4 and the ADF statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// `None` for a constant series.
    pub ac: [Option<f64>; 4],
    pub adf: Option<f64>,
    pub adf_lags: Option<usize>,
    pub adf_stars: &'static str,
    /// Why the ADF entry is missing, if it is.
    pub adf_note: Option<String>,
}

pub fn summarize(values: &[f64], adf_max_lags: Option<usize>) -> Result<SummaryStats> {
    let s = Series::new(values.to_vec())?;
    let constant = values.iter().all(|v| *v == values[0]);
    let mut ac = [None; 4];
    if !constant {
        for (k, slot) in ac.iter_mut().enumerate() {
            if k + 1 < s.len() {
                *slot = Some(s.autocorrelation(k + 1)?);
            }
        }
    }
    let (adf, adf_lags, adf_stars, adf_note) = match adf_test(&s, adf_max_lags) {
        Ok(r) => (Some(r.statistic), Some(r.selected_lags), r.stars(), None),
        Err(e) => (None, None, "", Some(e.to_string())),
    };
    Ok(SummaryStats {
        n: s.len(),
        mean: s.mean(),
        median: s.median(),
        std: s.std_dev(),
        ac,
        adf,
        adf_lags,
        adf_stars,
        adf_note,
    })
}

/// One DM statistic in a bandwidth grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmCell {
    pub rule: BandwidthRule,
    pub bandwidth: usize,
    /// `None` when the long-run variance is degenerate.
    pub statistic: Option<f64>,
    pub stars: &'static str,
    pub cv_10: Option<f64>,
    pub cv_5: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrids {
    pub bartlett: Vec<BandwidthRule>,
    pub daniell: Vec<BandwidthRule>,
}

impl Default for BandwidthGrids {
    fn default() -> Self {
        Self {
            bartlett: vec![BandwidthRule::power(2, 9), BandwidthRule::power(1, 3), BandwidthRule::power(1, 2), BandwidthRule::FULL],
            daniell: vec![
                BandwidthRule::ONE,
                BandwidthRule::power(1, 4),
                BandwidthRule::power(1, 3),
                BandwidthRule::power(1, 2),
                BandwidthRule::power(2, 3),
            ],
        }
    }
}

/// Candidate (AR(1)) against one benchmark at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEvaluation {
    pub benchmark: Method,
    pub horizon: usize,
    pub targets: Vec<Quarter>,
    /// Benchmark loss minus candidate loss.
    pub loss_diff: Vec<f64>,
    pub summary: SummaryStats,
    pub dm_a: Vec<DmCell>,
    pub dm_p: Vec<DmCell>,
}

fn cell(rule: BandwidthRule, bandwidth: usize, r: Result<crate::dm::DmResult>) -> Result<DmCell> {
    match r {
        Ok(r) => Ok(DmCell {
            rule,
            bandwidth,
            statistic: Some(r.statistic),
            stars: r.stars(),
            cv_10: Some(r.cv_10),
            cv_5: Some(r.cv_5),
            note: None,
        }),
        Err(DmError::DegenerateVariance) => Ok(DmCell {
            rule,
            bandwidth,
            statistic: None,
            stars: "",
            cv_10: None,
            cv_5: None,
            note: Some("degenerate variance".into()),
        }),
        Err(e) => Err(e),
    }
}

/// Compares `candidate` with `benchmark` under quadratic loss. Stars use
/// fixed-b (Bartlett) and t_{2m} (Daniell) critical values.
pub fn evaluate(
    candidate: &ForecastPanel,
    benchmark: &ForecastPanel,
    grids: &BandwidthGrids,
    fixed_b: &CriticalValueTable,
    adf_max_lags: Option<usize>,
) -> Result<PairEvaluation> {
    if candidate.targets() != benchmark.targets() || candidate.spec.horizon != benchmark.spec.horizon {
        return Err(DmError::InvalidParameter("misaligned panels: target quarters or horizons differ".into()));
    }
    let d = loss_differential(
        &Series::new(benchmark.errors())?,
        &Series::new(candidate.errors())?,
        LossKind::Quadratic,
    )?;
    let t = d.len();
    let dm_a_cells = grids
        .bartlett
        .iter()
        .map(|rule| {
            let m = rule.evaluate(t);
            cell(*rule, m, dm_a(&d, m, CvRegime::FixedB(fixed_b)))
        })
        .collect::<Result<_>>()?;
    let dm_p_cells = grids
        .daniell
        .iter()
        .map(|rule| {
            let m = rule.evaluate(t);
            cell(*rule, m, dm_p(&d, m, CvRegime::FixedM))
        })
        .collect::<Result<_>>()?;
    Ok(PairEvaluation {
        benchmark: benchmark.spec.method,
        horizon: candidate.spec.horizon,
        targets: candidate.targets(),
        summary: summarize(d.values(), adf_max_lags)?,
        loss_diff: d.values().to_vec(),
        dm_a: dm_a_cells,
        dm_p: dm_p_cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConfig {
    pub window: usize,
    pub horizons: Vec<usize>,
    pub eval_start: Quarter,
    pub eval_end: Quarter,
    pub ar1_mode: Ar1Mode,
    pub constant: f64,
    pub grids: BandwidthGrids,
    /// `None` uses the default ADF lag rule.
    pub adf_max_lags: Option<usize>,
}

impl Default for EmpiricalConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            horizons: (1..=8).collect(),
            eval_start: Quarter { year: 2010, q: 1 },
            eval_end: Quarter { year: 2020, q: 4 },
            ar1_mode: Ar1Mode::Iterated,
            constant: INFLATION_TARGET,
            grids: BandwidthGrids::default(),
            adf_max_lags: None,
        }
    }
}

impl EmpiricalConfig {
    pub fn methods(&self) -> [Method; 3] {
        [Method::Ar1, Method::RollingAverage, Method::Constant(self.constant)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub horizon: usize,
    pub errors: SummaryStats,
    pub losses: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: EmpiricalConfig,
    pub inflation: QuarterlySeries,
    /// Ordered by method, then horizon.
    pub panels: Vec<ForecastPanel>,
    pub summaries: Vec<MethodSummary>,
    /// Ordered by benchmark, then horizon.
    pub comparisons: Vec<PairEvaluation>,
}

impl EvalReport {
    pub fn panel(&self, method: Method, horizon: usize) -> Option<&ForecastPanel> {
        self.panels.iter().find(|p| p.spec.method == method && p.spec.horizon == horizon)
    }

    pub fn comparison(&self, benchmark: Method, horizon: usize) -> Option<&PairEvaluation> {
        self.comparisons.iter().find(|c| c.benchmark == benchmark && c.horizon == horizon)
    }

    /// True when the constant benchmark's errors are bitwise identical
    /// across horizons.
    pub fn constant_panel_horizon_invariant(&self) -> bool {
        let c = Method::Constant(self.config.constant);
        let first = self.config.horizons.first().and_then(|h| self.panel(c, *h));
        match first {
            None => true,
            Some(p0) => self.config.horizons.iter().all(|h| {
                self.panel(c, *h).is_some_and(|p| {
                    p.rows.len() == p0.rows.len()
                        && p.rows.iter().zip(&p0.rows).all(|(a, b)| a.target == b.target && a.error.to_bits() == b.error.to_bits())
                })
            }),
        }
    }
}

/// Runs the full rolling-forecast evaluation on quarterly inflation.
pub fn run_pipeline(inflation: &QuarterlySeries, config: &EmpiricalConfig, fixed_b: &CriticalValueTable) -> Result<EvalReport> {
    if config.horizons.is_empty() {
        return Err(DmError::InvalidParameter("no forecast horizons".into()));
    }
    let methods = config.methods();
    let mut panels = Vec::new();
    for method in methods {
        for &h in &config.horizons {
            let spec = ForecastSpec {
                method,
                ar1_mode: config.ar1_mode,
                horizon: h,
                window: config.window,
                eval_start: config.eval_start,
                eval_end: config.eval_end,
            };
            panels.push(rolling_forecast(inflation, &spec)?);
        }
    }
    let mut summaries = Vec::new();
    for p in &panels {
        let errors = p.errors();
        let losses: Vec<f64> = errors.iter().map(|e| LossKind::Quadratic.loss(*e)).collect();
        summaries.push(MethodSummary {
            method: p.spec.method,
            horizon: p.spec.horizon,
            errors: summarize(&errors, config.adf_max_lags)?,
            losses: summarize(&losses, config.adf_max_lags)?,
        });
    }
    let find = |m: Method, h: usize| panels.iter().find(|p| p.spec.method == m && p.spec.horizon == h).expect("built above");
    let mut comparisons = Vec::new();
    for bench in &methods[1..] {
        for &h in &config.horizons {
            comparisons.push(evaluate(find(Method::Ar1, h), find(*bench, h), &config.grids, fixed_b, config.adf_max_lags)?);
        }
    }
    Ok(EvalReport { config: config.clone(), inflation: inflation.clone(), panels, summaries, comparisons })
}

/// Stars for a DM cell as displayed in tables.
pub fn cell_stars(c: &DmCell) -> &'static str {
    match (c.statistic, c.cv_10, c.cv_5) {
        (Some(s), Some(c10), Some(c5)) => stars(s.abs() > c10, s.abs() > c5),
        _ => "",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dm::{CvEntry, CvRegimeKind, Provenance};
    use crate::rng::SeedStream;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use rayon::prelude::*;

    fn toy_table() -> CriticalValueTable {
        let mut entries = Vec::new();
        for b in [0.01, 0.5, 1.0] {
            entries.push(CvEntry { param: b, level: 0.10, quantile: 1.7 + b });
            entries.push(CvEntry { param: b, level: 0.05, quantile: 2.0 + 2.0 * b });
        }
        CriticalValueTable { regime: CvRegimeKind::FixedB, entries, provenance: Provenance::Analytic }
    }

    fn synthetic_inflation(seed: u64) -> QuarterlySeries {
        let mut rng = SeedStream::new(seed).rng(0);
        let mut y = 2.0;
        QuarterlySeries {
            start: Quarter { year: 1997, q: 1 },
            values: (0..96)
                .map(|_| {
                    y = 0.3 + 0.85 * y + 0.4 * rng.sample::<f64, _>(StandardNormal);
                    y
                })
                .collect(),
        }
    }

    #[test]
    fn pipeline_shapes() {
        let r = run_pipeline(&synthetic_inflation(3), &EmpiricalConfig::default(), &toy_table()).unwrap();
        assert_eq!(r.panels.len(), 24);
        assert!(r.panels.iter().all(|p| p.rows.len() == 44));
        assert_eq!(r.comparisons.len(), 16);
        let bws: Vec<usize> = r.comparisons[0].dm_a.iter().map(|c| c.bandwidth).collect();
        assert_eq!(bws, vec![2, 3, 6, 44]);
        let bws: Vec<usize> = r.comparisons[0].dm_p.iter().map(|c| c.bandwidth).collect();
        assert_eq!(bws, vec![1, 2, 3, 6, 12]);
        assert!(r.constant_panel_horizon_invariant());
        for c in &r.comparisons {
            for cell in c.dm_a.iter().chain(&c.dm_p) {
                assert_eq!(cell.stars, cell_stars(cell));
            }
        }
    }

    #[test]
    fn loss_differential_sign_convention() {
        let r = run_pipeline(&synthetic_inflation(4), &EmpiricalConfig::default(), &toy_table()).unwrap();
        let c = r.comparison(Method::RollingAverage, 2).unwrap();
        let ar = r.panel(Method::Ar1, 2).unwrap();
        let ra = r.panel(Method::RollingAverage, 2).unwrap();
        for (k, d) in c.loss_diff.iter().enumerate() {
            assert_eq!(*d, ra.rows[k].error.powi(2) - ar.rows[k].error.powi(2));
        }
        let twopct = r.panel(Method::Constant(2.0), 5).unwrap();
        for row in &twopct.rows {
            assert_eq!(row.error, row.realized - 2.0);
        }
    }

    #[test]
    fn self_comparison_is_labelled_not_fatal() {
        let y = synthetic_inflation(5);
        let spec = ForecastSpec {
            method: Method::RollingAverage,
            ar1_mode: Ar1Mode::Iterated,
            horizon: 1,
            window: 40,
            eval_start: Quarter { year: 2010, q: 1 },
            eval_end: Quarter { year: 2020, q: 4 },
        };
        let p = rolling_forecast(&y, &spec).unwrap();
        let e = evaluate(&p, &p, &BandwidthGrids::default(), &toy_table(), None).unwrap();
        assert!(e.loss_diff.iter().all(|d| *d == 0.0));
        for c in e.dm_a.iter().chain(&e.dm_p) {
            assert!(c.statistic.is_none());
            assert_eq!(c.note.as_deref(), Some("degenerate variance"));
        }
        assert!(e.summary.adf.is_none() && e.summary.adf_note.is_some());
        assert!(e.summary.ac.iter().all(Option::is_none));
    }

    #[test]
    fn misaligned_panels_rejected() {
        let y = synthetic_inflation(6);
        let mk = |h| {
            let spec = ForecastSpec {
                method: Method::Constant(2.0),
                ar1_mode: Ar1Mode::Iterated,
                horizon: h,
                window: 40,
                eval_start: Quarter { year: 2010, q: 1 },
                eval_end: Quarter { year: 2020, q: 4 },
            };
            rolling_forecast(&y, &spec).unwrap()
        };
        assert!(evaluate(&mk(1), &mk(2), &BandwidthGrids::default(), &toy_table(), None).is_err());
    }

    #[test]
    fn strongly_separated_losses_are_significant() {
        // d_t i.i.d. N(−1, 1), T = 44: DM_P(m = 12) negative and significant
        let hits = (0..1000u64)
            .into_par_iter()
            .filter(|s| {
                let mut rng = SeedStream::new(77).rng(*s);
                let d: Vec<f64> = (0..44).map(|_| -1.0 + rng.sample::<f64, _>(StandardNormal)).collect();
                let d = crate::series::LossDifferential::from_series(Series::new(d).unwrap());
                let r = dm_p(&d, 12, CvRegime::FixedM).unwrap();
                r.statistic < 0.0 && r.reject_5
            })
            .count();
        assert!(hits >= 950, "{hits}");
    }

    #[test]
    fn summary_values() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 10.0], None).unwrap();
        assert_eq!((s.n, s.mean, s.median), (5, 4.0, 3.0));
        assert!((s.std - 12.5f64.sqrt()).abs() < 1e-12);
        // demeaned [−3, −2, −1, 0, 6]: γ0 = 50/5, γ1 = 8/5
        assert!((s.ac[0].unwrap() - 0.16).abs() < 1e-12);
        assert!(s.adf.is_none() && s.adf_note.as_deref().unwrap().contains("too short"));
    }
}
