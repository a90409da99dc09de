//! The DM statistics with Bartlett and Daniell long-run variances, their
//! critical values under standard and fixed-smoothing asymptotics, and
//! two-sided decisions.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{DmError, Result};
use crate::series::LossDifferential;
use crate::spectral::{bartlett_demeaned, Estimator, LrvEstimate, Periodogram};
use crate::spectral::periodogram;

/// Levels reported with every test.
pub const LEVELS: [f64; 2] = [0.10, 0.05];

/// Where a critical value comes from.
#[derive(Debug, Clone, Copy)]
pub enum CvRegime<'a> {
    StandardNormal,
    /// Student t with 2m degrees of freedom (Daniell, m fixed).
    FixedM,
    /// Simulated fixed-b table (Bartlett, M/T → b).
    FixedB(&'a CriticalValueTable),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvRegimeKind {
    StandardNormal,
    FixedMT,
    FixedB,
}

impl CvRegimeKind {
    pub fn name(self) -> &'static str {
        match self {
            CvRegimeKind::StandardNormal => "standard_normal",
            CvRegimeKind::FixedMT => "fixed_m_t",
            CvRegimeKind::FixedB => "fixed_b",
        }
    }
}

impl CvRegime<'_> {
    pub fn kind(&self) -> CvRegimeKind {
        match self {
            CvRegime::StandardNormal => CvRegimeKind::StandardNormal,
            CvRegime::FixedM => CvRegimeKind::FixedMT,
            CvRegime::FixedB(_) => CvRegimeKind::FixedB,
        }
    }
}

/// Fully specified reference distribution for [`critical_value`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceLaw {
    StandardNormal,
    FixedMT { m: usize },
    FixedB { b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmResult {
    pub statistic: f64,
    pub estimator: Estimator,
    pub bandwidth: usize,
    pub cv_regime: CvRegimeKind,
    pub cv_10: f64,
    pub cv_5: f64,
    pub reject_10: bool,
    pub reject_5: bool,
    pub mean_loss_diff: f64,
    pub lrv: f64,
}

impl DmResult {
    /// `"**"` at 5%, `"*"` at 10%, empty otherwise.
    pub fn stars(&self) -> &'static str {
        stars(self.reject_10, self.reject_5)
    }
}

pub fn stars(reject_10: bool, reject_5: bool) -> &'static str {
    match (reject_10, reject_5) {
        (_, true) => "**",
        (true, false) => "*",
        _ => "",
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(DmError::UnsupportedLevel(level))
    }
}

/// Upper `p` quantile of the standard normal.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(p)
}

/// Quantile of Student's t with `dof` degrees of freedom, by bracketed
/// bisection on the distribution function.
pub fn student_t_quantile(p: f64, dof: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || !(dof > 0.0) {
        return Err(DmError::InvalidParameter(format!("t quantile p={p}, dof={dof}")));
    }
    if p < 0.5 {
        return student_t_quantile(1.0 - p, dof).map(|q| -q);
    }
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| DmError::InvalidParameter(e.to_string()))?;
    let mut hi = 1.0;
    while dist.cdf(hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-sided critical value at `level` (e.g. 0.05 → 97.5% quantile).
pub fn critical_value(
    law: ReferenceLaw,
    level: f64,
    fixed_b: Option<&CriticalValueTable>,
) -> Result<f64> {
    check_level(level)?;
    match law {
        ReferenceLaw::StandardNormal => Ok(normal_quantile(1.0 - level / 2.0)),
        ReferenceLaw::FixedMT { m } => {
            if m == 0 {
                return Err(DmError::BandwidthOutOfRange { bandwidth: 0, max: usize::MAX });
            }
            student_t_quantile(1.0 - level / 2.0, 2.0 * m as f64)
        }
        ReferenceLaw::FixedB { b } => {
            let table = fixed_b.ok_or_else(|| {
                DmError::InvalidParameter("fixed-b critical values need a table".into())
            })?;
            table.quantile(b, level)
        }
    }
}

fn decide(
    statistic: f64,
    mean: f64,
    lrv: LrvEstimate,
    law: ReferenceLaw,
    kind: CvRegimeKind,
    table: Option<&CriticalValueTable>,
) -> Result<DmResult> {
    let cv_10 = critical_value(law, 0.10, table)?;
    let cv_5 = critical_value(law, 0.05, table)?;
    Ok(DmResult {
        statistic,
        estimator: lrv.estimator,
        bandwidth: lrv.bandwidth,
        cv_regime: kind,
        cv_10,
        cv_5,
        reject_10: statistic.abs() > cv_10,
        reject_5: statistic.abs() > cv_5,
        mean_loss_diff: mean,
        lrv: lrv.value,
    })
}

/// Relative floor below which a long-run variance counts as zero.
const DEGENERATE_RTOL: f64 = 1e-12;

fn studentize(mean: f64, len: usize, lrv: &LrvEstimate, scale: f64) -> Result<f64> {
    // scale is Σ d_t² / T, so constant series with rounding noise still fail
    if !(lrv.value > DEGENERATE_RTOL * scale) || lrv.value <= 0.0 {
        return Err(DmError::DegenerateVariance);
    }
    Ok((len as f64).sqrt() * mean / lrv.value.sqrt())
}

fn second_moment(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

/// `DM_A = √T d̄ / σ̂_A` with Bartlett bandwidth `M`.
pub fn dm_a(d: &LossDifferential, bandwidth: usize, regime: CvRegime<'_>) -> Result<DmResult> {
    d.series.require_len(2)?;
    let lrv = bartlett_demeaned(&d.series.demeaned(), bandwidth)?;
    let law = match regime {
        CvRegime::StandardNormal => ReferenceLaw::StandardNormal,
        CvRegime::FixedB(_) => ReferenceLaw::FixedB { b: bandwidth as f64 / d.len() as f64 },
        CvRegime::FixedM => {
            return Err(DmError::InvalidParameter("DM_A uses standard or fixed-b critical values".into()))
        }
    };
    let table = match regime {
        CvRegime::FixedB(t) => Some(t),
        _ => None,
    };
    let mean = d.mean();
    let stat = studentize(mean, d.len(), &lrv, second_moment(d.values()))?;
    decide(stat, mean, lrv, law, regime.kind(), table)
}

/// `DM_P = √T d̄ / σ̂_P` with Daniell bandwidth `m`.
pub fn dm_p(d: &LossDifferential, bandwidth: usize, regime: CvRegime<'_>) -> Result<DmResult> {
    d.series.require_len(2)?;
    let max = d.len() / 2;
    if bandwidth == 0 || bandwidth > max {
        return Err(DmError::BandwidthOutOfRange { bandwidth, max });
    }
    let pg = periodogram(&d.series)?;
    dm_p_from_periodogram(d, &pg, bandwidth, regime)
}

/// [`dm_p`] reusing a precomputed periodogram of `d`.
pub fn dm_p_from_periodogram(
    d: &LossDifferential,
    pg: &Periodogram,
    bandwidth: usize,
    regime: CvRegime<'_>,
) -> Result<DmResult> {
    let lrv = pg.daniell(bandwidth)?;
    let law = match regime {
        CvRegime::StandardNormal => ReferenceLaw::StandardNormal,
        CvRegime::FixedM => ReferenceLaw::FixedMT { m: bandwidth },
        CvRegime::FixedB(_) => {
            return Err(DmError::InvalidParameter("DM_P uses standard or fixed-m critical values".into()))
        }
    };
    let mean = d.mean();
    let stat = studentize(mean, d.len(), &lrv, second_moment(d.values()))?;
    decide(stat, mean, lrv, law, regime.kind(), None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Analytic,
    Simulated { seed: u64, paths: usize, grid: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub param: f64,
    pub level: f64,
    pub quantile: f64,
}

/// Two-sided quantiles of a fixed-smoothing reference law over a
/// parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueTable {
    pub regime: CvRegimeKind,
    pub entries: Vec<CvEntry>,
    pub provenance: Provenance,
}

impl CriticalValueTable {
    pub fn levels(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for e in &self.entries {
            if !v.iter().any(|l| (l - e.level).abs() < 1e-12) {
                v.push(e.level);
            }
        }
        v
    }

    pub fn params(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for e in &self.entries {
            if !v.iter().any(|p| (p - e.param).abs() < 1e-12) {
                v.push(e.param);
            }
        }
        v.sort_by(f64::total_cmp);
        v
    }

    fn column(&self, level: f64) -> Vec<(f64, f64)> {
        let mut col: Vec<(f64, f64)> = self
            .entries
            .iter()
            .filter(|e| (e.level - level).abs() < 1e-12)
            .map(|e| (e.param, e.quantile))
            .collect();
        col.sort_by(|a, b| a.0.total_cmp(&b.0));
        col
    }

    /// Interpolated fixed-b quantile.
    ///
    /// `b` is first snapped down to the simulation grid `⌊bN⌋/N`, then
    /// interpolated linearly between tabulated points. Below the smallest
    /// tabulated `b` the interpolation runs towards the normal quantile at
    /// `b = 0`.
    pub fn quantile(&self, b: f64, level: f64) -> Result<f64> {
        if !(b > 0.0 && b <= 1.0) {
            return Err(DmError::InvalidParameter(format!("fixed-b parameter {b} outside (0, 1]")));
        }
        let col = self.column(level);
        if col.is_empty() {
            return Err(DmError::UnsupportedLevel(level));
        }
        let b = match self.provenance {
            Provenance::Simulated { grid, .. } if grid > 0 => {
                let g = grid as f64;
                ((b * g + 1e-9).floor() / g).max(1.0 / g)
            }
            _ => b,
        };
        if let Some((_, q)) = col.iter().find(|(p, _)| (p - b).abs() < 1e-12) {
            return Ok(*q);
        }
        let (p0, q0) = col[0];
        if b < p0 {
            let z = normal_quantile(1.0 - level / 2.0);
            return Ok(z + (q0 - z) * b / p0);
        }
        for w in col.windows(2) {
            let ((pa, qa), (pb, qb)) = (w[0], w[1]);
            if b >= pa && b <= pb {
                return Ok(qa + (qb - qa) * (b - pa) / (pb - pa));
            }
        }
        Ok(col[col.len() - 1].1)
    }

    /// CSV with columns `regime,param,level,quantile,seed,paths`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["regime", "param", "level", "quantile", "seed", "paths"])?;
        let (seed, paths) = match &self.provenance {
            Provenance::Analytic => (String::new(), String::new()),
            Provenance::Simulated { seed, paths, .. } => (seed.to_string(), paths.to_string()),
        };
        for e in &self.entries {
            wr.write_record([
                self.regime.name().to_string(),
                format!("{}", e.param),
                format!("{}", e.level),
                format!("{:.6}", e.quantile),
                seed.clone(),
                paths.clone(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv). The simulation grid size
    /// is not part of the CSV and must be supplied for simulated tables.
    pub fn read_csv<R: Read>(r: R, grid: usize) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut entries = Vec::new();
        let mut regime = None;
        let mut prov = Provenance::Analytic;
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != 6 {
                return Err(DmError::Parse(format!("expected 6 columns, got {}", rec.len())));
            }
            let kind = match &rec[0] {
                "standard_normal" => CvRegimeKind::StandardNormal,
                "fixed_m_t" => CvRegimeKind::FixedMT,
                "fixed_b" => CvRegimeKind::FixedB,
                other => return Err(DmError::Parse(format!("unknown regime '{other}'"))),
            };
            regime.get_or_insert(kind);
            let num = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| DmError::Parse(format!("bad number '{}'", &rec[i])))
            };
            entries.push(CvEntry { param: num(1)?, level: num(2)?, quantile: num(3)? });
            if !rec[4].is_empty() {
                let seed = rec[4].parse().map_err(|_| DmError::Parse("bad seed".into()))?;
                let paths = rec[5].parse().map_err(|_| DmError::Parse("bad paths".into()))?;
                prov = Provenance::Simulated { seed, paths, grid };
            }
        }
        let regime = regime.ok_or_else(|| DmError::Parse("empty critical-value table".into()))?;
        Ok(Self { regime, entries, provenance: prov })
    }
}

impl fmt::Display for CvRegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
