//! Simulation of the near-unit-root limit objects: Ornstein–Uhlenbeck
//! paths, their bridge functionals, the limiting DM statistics and the
//! null fixed-b critical-value table.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dm::{CriticalValueTable, CvEntry, CvRegimeKind, Provenance, LEVELS};
use crate::error::{DmError, Result};
use crate::rng::SeedStream;
use crate::spectral::{autocovariances_fft, bartlett_from_acov};
use crate::stats::quantile_sorted;

pub const DEFAULT_GRID: usize = 1024;
pub const MIN_GRID: usize = 64;

/// b-grid of the fixed-b table.
pub const DEFAULT_B_GRID: [f64; 12] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub fn default_b_grid() -> Vec<f64> {
    let mut g = DEFAULT_B_GRID.to_vec();
    g.push(1.0);
    g
}

/// An OU path `J_c(r_k)` on `r_k = k/N`, `k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuPath {
    pub values: Vec<f64>,
    pub c: f64,
    pub seed: Option<u64>,
}

impl OuPath {
    /// Wrap externally supplied grid values (length N + 1).
    pub fn from_values(values: Vec<f64>, c: f64) -> Result<Self> {
        if values.len() < 3 {
            return Err(DmError::TooShort { needed: 3, got: values.len() });
        }
        Ok(Self { values, c, seed: None })
    }

    pub fn grid(&self) -> usize {
        self.values.len() - 1
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.grid()]
    }
}

fn check_ou_params(c: f64, grid: usize) -> Result<()> {
    if !(c <= 0.0) {
        return Err(DmError::InvalidParameter(format!("OU parameter c = {c} must be ≤ 0")));
    }
    if grid < MIN_GRID {
        return Err(DmError::InvalidParameter(format!("grid size {grid} below {MIN_GRID}")));
    }
    Ok(())
}

/// Exact AR(1) recursion of the OU process on a uniform grid:
/// `J_{k+1} = e^{cΔ} J_k + η_k`, `Var η = (e^{2cΔ} − 1)/(2c)` (Δ when c = 0).
pub fn simulate_ou_path(c: f64, grid: usize, seed: u64) -> Result<OuPath> {
    check_ou_params(c, grid)?;
    let mut rng = SeedStream::new(seed).rng(0);
    let mut path = ou_values(c, grid, &mut rng);
    path.shrink_to_fit();
    Ok(OuPath { values: path, c, seed: Some(seed) })
}

pub(crate) fn ou_values<R: Rng>(c: f64, grid: usize, rng: &mut R) -> Vec<f64> {
    let dt = 1.0 / grid as f64;
    let (decay, sd) = if c == 0.0 {
        (1.0, dt.sqrt())
    } else {
        ((c * dt).exp(), (((2.0 * c * dt).exp() - 1.0) / (2.0 * c)).sqrt())
    };
    let mut v = Vec::with_capacity(grid + 1);
    let mut j = 0.0;
    v.push(j);
    for _ in 0..grid {
        let z: f64 = rng.sample(StandardNormal);
        j = decay * j + sd * z;
        v.push(j);
    }
    v
}

/// Functionals of one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitFunctionals {
    /// `∫ J`.
    pub mean_jc: f64,
    /// `∫ J²`.
    pub int_jc_sq: f64,
    /// `J̃(r) = J(r) − r J(1)` on the grid.
    pub bridge: Vec<f64>,
    pub q_a: f64,
    /// `Q_P(j)` for `j = 1..=m`.
    pub q_p: Vec<f64>,
    /// `∫∫ k_b(r − s) (J(r) − J̄)(J(s) − J̄) dr ds` with the Bartlett kernel
    /// `k_b(x) = (1 − |x|/b)⁺`: the limit of `σ̂²_A / T²` for a near-unit-root
    /// series in levels.
    pub q_a_levels: f64,
    /// `|∫ J(r) e^{2πijr} dr|²`: the limit of `2π I(λ_j) / T²` for a
    /// near-unit-root series in levels.
    pub q_p_levels: Vec<f64>,
    /// `b` actually used after snapping to the path grid.
    pub b_snapped: f64,
    /// `b − b_snapped`.
    pub snap_distance: f64,
}

fn trapezoid(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    let inner: f64 = values[1..n].iter().sum();
    (inner + 0.5 * (values[0] + values[n])) / n as f64
}

fn bridge(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    let end = values[n];
    values.iter().enumerate().map(|(k, v)| v - (k as f64 / n as f64) * end).collect()
}

fn snap(b: f64, grid: usize) -> Result<usize> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(DmError::InvalidParameter(format!("b = {b} outside (0, 1]")));
    }
    Ok(((b * grid as f64 + 1e-9).floor() as usize).clamp(1, grid))
}

/// Bartlett bridge functional with the lag snapped to `shift` grid steps.
fn q_a_shift(bridge: &[f64], shift: usize) -> f64 {
    let n = bridge.len() - 1;
    let b = shift as f64 / n as f64;
    let sq: Vec<f64> = bridge.iter().map(|v| v * v).collect();
    let cross = if shift >= n {
        0.0
    } else {
        let prod: Vec<f64> = bridge[..=n - shift].iter().zip(&bridge[shift..]).map(|(a, c)| a * c).collect();
        // trapezoid over [0, 1 − b] with the same spacing 1/N
        trapezoid(&prod) * (n - shift) as f64 / n as f64
    };
    2.0 / b * (trapezoid(&sq) - cross)
}

/// Levels Bartlett functional: the Bartlett estimate on the grid values
/// `J_1..J_N` with lag window `shift`, divided by N.
fn q_a_levels(values: &[f64], shift: usize) -> f64 {
    let n = values.len() - 1;
    let y = &values[1..];
    let m = y.iter().sum::<f64>() / n as f64;
    let dm: Vec<f64> = y.iter().map(|v| v - m).collect();
    let acov = autocovariances_fft(&dm, shift);
    bartlett_from_acov(&acov, shift) / n as f64
}

fn q_p_levels(values: &[f64], m: usize, tw: &Twiddles) -> Vec<f64> {
    q_p_values(values, m, tw)
        .into_iter()
        .enumerate()
        .map(|(i, q)| q / (2.0 * PI * (i + 1) as f64).powi(2))
        .collect()
}

/// Table of `e^{2πi k/N}`.
struct Twiddles {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Twiddles {
    fn new(grid: usize) -> Self {
        let (cos, sin) = (0..grid)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / grid as f64;
                (a.cos(), a.sin())
            })
            .unzip();
        Self { cos, sin }
    }
}

/// `Q_P(j)` for `j = 1..=m`, integrating `e^{2πijr}` against the
/// piecewise-linear interpolant of the bridge exactly.
fn q_p_values(bridge: &[f64], m: usize, tw: &Twiddles) -> Vec<f64> {
    let n = bridge.len() - 1;
    let h = 1.0 / n as f64;
    let slopes: Vec<f64> = bridge.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    (1..=m)
        .map(|j| {
            let omega = 2.0 * PI * j as f64;
            // Σ s_k (E_{k+1} − E_k) = Σ_k E_k (s_{k−1} − s_k) with s_{−1} = s_{N} = 0 on a closed loop
            let (mut re, mut im) = (0.0, 0.0);
            let mut idx = 0usize;
            for k in 0..=n {
                let prev = if k == 0 { 0.0 } else { slopes[k - 1] };
                let next = if k == n { 0.0 } else { slopes[k] };
                let w = prev - next;
                re += w * tw.cos[idx];
                im += w * tw.sin[idx];
                idx += j;
                if idx >= n {
                    idx -= n;
                }
            }
            re /= omega * omega;
            im /= omega * omega;
            // boundary term (f(1) − f(0)) / (iω)
            let boundary = (bridge[n] - bridge[0]) / omega;
            im -= boundary;
            omega * omega * (re * re + im * im)
        })
        .collect()
}

/// All functionals of `path` at fixed-b parameter `b` and `m` Daniell
/// frequencies. Trapezoidal quadrature on the path grid.
pub fn limit_functionals(path: &OuPath, b: f64, m: usize) -> Result<LimitFunctionals> {
    let grid = path.grid();
    let shift = snap(b, grid)?;
    let tw = Twiddles::new(grid);
    Ok(functionals_with(path, shift, m, &tw, b))
}

fn functionals_with(path: &OuPath, shift: usize, m: usize, tw: &Twiddles, b: f64) -> LimitFunctionals {
    let v = &path.values;
    let br = bridge(v);
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let b_snapped = shift as f64 / path.grid() as f64;
    LimitFunctionals {
        mean_jc: trapezoid(v),
        int_jc_sq: trapezoid(&sq),
        q_a: q_a_shift(&br, shift),
        q_p: q_p_values(&br, m, tw),
        q_a_levels: q_a_levels(v, shift),
        q_p_levels: q_p_levels(v, m, tw),
        bridge: br,
        b_snapped,
        snap_distance: b - b_snapped,
    }
}

/// Which limiting statistic to sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LimitRegime {
    /// `J̄ / sqrt(∫(J² − J̄²))`, the limit of `√(M/T)·DM_A` for small b.
    Thm1A,
    /// `J̄ / sqrt(½ ∫(J² − J̄²))`, the limit of `DM_P / √m` for growing m.
    Thm1P,
    /// Fixed-b limit of `DM_A` on levels: `J̄ / sqrt(q_a_levels(b))`.
    Thm2A { b: f64 },
    /// Fixed-m limit of `DM_P` on levels: `J̄ / sqrt(m⁻¹ Σ_{j≤m} q_p_levels(j))`.
    Thm2P { m: usize },
    /// `J̄ / sqrt(Q_A(b))` with the bridge functional.
    Thm2AAsPrinted { b: f64 },
    /// `J̄ / sqrt(m⁻¹ Σ_{j≤m} Q_P(j))` with the bridge functional.
    Thm2PAsPrinted { m: usize },
    /// `W(1) / sqrt(Q_A(b))` with `W̃` the Brownian bridge: the null
    /// fixed-b law.
    NullFixedB { b: f64 },
}

impl LimitRegime {
    pub fn label(&self) -> String {
        match self {
            LimitRegime::Thm1A => "thm1_A".into(),
            LimitRegime::Thm1P => "thm1_P".into(),
            LimitRegime::Thm2A { b } => format!("thm2_A(b={b})"),
            LimitRegime::Thm2P { m } => format!("thm2_P(m={m})"),
            LimitRegime::Thm2AAsPrinted { b } => format!("thm2_A_bridge(b={b})"),
            LimitRegime::Thm2PAsPrinted { m } => format!("thm2_P_bridge(m={m})"),
            LimitRegime::NullFixedB { b } => format!("null_fixed_b(b={b})"),
        }
    }
}

fn statistic(path: &OuPath, regime: LimitRegime, tw: &Twiddles) -> f64 {
    let grid = path.grid();
    match regime {
        LimitRegime::Thm1A | LimitRegime::Thm1P => {
            let mean = trapezoid(&path.values);
            let sq: Vec<f64> = path.values.iter().map(|x| x * x).collect();
            let var = trapezoid(&sq) - mean * mean;
            let scale = if matches!(regime, LimitRegime::Thm1P) { 0.5 } else { 1.0 };
            mean / (scale * var).sqrt()
        }
        LimitRegime::Thm2A { b } => {
            let k = q_a_levels(&path.values, snap(b, grid).unwrap_or(grid));
            trapezoid(&path.values) / k.sqrt()
        }
        LimitRegime::Thm2P { m } => {
            let q = q_p_levels(&path.values, m, tw);
            trapezoid(&path.values) / (q.iter().sum::<f64>() / m as f64).sqrt()
        }
        LimitRegime::Thm2AAsPrinted { b } => {
            let br = bridge(&path.values);
            trapezoid(&path.values) / q_a_shift(&br, snap(b, grid).unwrap_or(grid)).sqrt()
        }
        LimitRegime::Thm2PAsPrinted { m } => {
            let br = bridge(&path.values);
            let q = q_p_values(&br, m, tw);
            trapezoid(&path.values) / (q.iter().sum::<f64>() / m as f64).sqrt()
        }
        LimitRegime::NullFixedB { b } => {
            let br = bridge(&path.values);
            path.terminal() / q_a_shift(&br, snap(b, grid).unwrap_or(grid)).sqrt()
        }
    }
}

/// `paths` i.i.d. draws of the limiting statistic; path `i` uses the seed
/// stream `(seed, i)`, so the output is independent of thread count.
pub fn sample_limit_statistic(
    c: f64,
    regime: LimitRegime,
    paths: usize,
    grid: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_ou_params(c, grid)?;
    if paths == 0 {
        return Err(DmError::InvalidParameter("paths must be ≥ 1".into()));
    }
    match regime {
        LimitRegime::Thm2A { b } | LimitRegime::Thm2AAsPrinted { b } | LimitRegime::NullFixedB { b } => {
            snap(b, grid)?;
        }
        LimitRegime::Thm2P { m } | LimitRegime::Thm2PAsPrinted { m } if m == 0 => {
            return Err(DmError::InvalidParameter("m must be ≥ 1".into()));
        }
        _ => {}
    }
    let tw = Twiddles::new(grid);
    let stream = SeedStream::new(seed);
    Ok((0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.rng(i as u64);
            let path = OuPath { values: ou_values(c, grid, &mut rng), c, seed: None };
            statistic(&path, regime, &tw)
        })
        .collect())
}

/// Null fixed-b table of two-sided quantiles of `|W(1)| / sqrt(Q_A(b))`.
pub fn cv_fixed_b(
    b_grid: &[f64],
    levels: &[f64],
    paths: usize,
    grid: usize,
    seed: u64,
) -> Result<CriticalValueTable> {
    check_ou_params(0.0, grid)?;
    if paths == 0 {
        return Err(DmError::InvalidParameter("paths must be ≥ 1".into()));
    }
    for l in levels {
        if !(*l > 0.0 && *l < 1.0) {
            return Err(DmError::UnsupportedLevel(*l));
        }
    }
    let shifts: Vec<usize> = b_grid.iter().map(|b| snap(*b, grid)).collect::<Result<_>>()?;
    let stream = SeedStream::new(seed);
    let draws: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.rng(i as u64);
            let w = ou_values(0.0, grid, &mut rng);
            let br = bridge(&w);
            let num = w[grid].abs();
            shifts.iter().map(|s| num / q_a_shift(&br, *s).sqrt()).collect()
        })
        .collect();
    let mut entries = Vec::new();
    for (bi, b) in b_grid.iter().enumerate() {
        let mut col: Vec<f64> = draws.iter().map(|d| d[bi]).collect();
        col.sort_by(f64::total_cmp);
        for level in levels {
            entries.push(CvEntry { param: *b, level: *level, quantile: quantile_sorted(&col, 1.0 - level) });
        }
    }
    Ok(CriticalValueTable {
        regime: CvRegimeKind::FixedB,
        entries,
        provenance: Provenance::Simulated { seed, paths, grid },
    })
}

/// Probabilities reported by [`limit_quantiles`].
pub const DIAGNOSTIC_PROBS: [f64; 5] = [0.05, 0.5, 0.9, 0.95, 0.975];

/// One row of the sampled-limit diagnostics: a quantile of `|statistic|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitQuantile {
    pub regime: String,
    pub c: f64,
    pub prob: f64,
    pub quantile: f64,
}

/// Quantiles of the absolute limiting statistic for every `(c, regime)`.
/// All regimes at a given `c` share the same paths (stream `(seed, ci)`).
pub fn limit_quantiles(
    c_values: &[f64],
    regimes: &[LimitRegime],
    probs: &[f64],
    paths: usize,
    grid: usize,
    seed: u64,
) -> Result<Vec<LimitQuantile>> {
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(DmError::InvalidParameter(format!("probability {p} outside (0, 1)")));
    }
    let root = SeedStream::new(seed);
    let mut rows = Vec::new();
    for (ci, &c) in c_values.iter().enumerate() {
        let s = root.child(ci as u64).master();
        for regime in regimes {
            let mut v: Vec<f64> = sample_limit_statistic(c, *regime, paths, grid, s)?.into_iter().map(f64::abs).collect();
            v.sort_by(f64::total_cmp);
            for &p in probs {
                rows.push(LimitQuantile { regime: regime.label(), c, prob: p, quantile: quantile_sorted(&v, p) });
            }
        }
    }
    Ok(rows)
}

pub fn write_limit_quantiles_csv<W: std::io::Write>(rows: &[LimitQuantile], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["regime", "c", "prob", "quantile"])?;
    for r in rows {
        wr.write_record([r.regime.clone(), r.c.to_string(), r.prob.to_string(), format!("{:.6}", r.quantile)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Seed, path count and grid of the shipped fixed-b table.
pub const DEFAULT_TABLE_SEED: u64 = 20_230_417;
pub const DEFAULT_TABLE_PATHS: usize = 100_000;

/// Environment variable naming a directory for cached critical-value tables.
pub const CACHE_DIR_ENV: &str = "DMKIT_CACHE_DIR";

static DEFAULT_TABLE: OnceLock<CriticalValueTable> = OnceLock::new();

/// Quantiles rounded as stored on disk, so fresh and cached tables agree.
fn round_trip(table: CriticalValueTable, grid: usize) -> Result<CriticalValueTable> {
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    CriticalValueTable::read_csv(buf.as_slice(), grid)
}

/// Loads the table from `dir` if a matching file exists, otherwise builds
/// it and (best effort) writes it there.
pub fn load_or_build_fixed_b(dir: Option<&Path>, paths: usize, grid: usize, seed: u64) -> Result<CriticalValueTable> {
    let b_grid = default_b_grid();
    let file = dir.map(|d| d.join(format!("fixed_b_s{seed}_p{paths}_n{grid}.csv")));
    if let Some(f) = &file {
        if let Ok(bytes) = fs::read(f) {
            if let Ok(t) = CriticalValueTable::read_csv(bytes.as_slice(), grid) {
                if t.params() == b_grid && t.levels() == LEVELS {
                    return Ok(t);
                }
            }
        }
    }
    let table = round_trip(cv_fixed_b(&b_grid, &LEVELS, paths, grid, seed)?, grid)?;
    if let Some(f) = &file {
        let _ = f.parent().map(fs::create_dir_all);
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        let _ = fs::write(f, buf);
    }
    Ok(table)
}

/// Cache directory: `$DMKIT_CACHE_DIR`, else `$XDG_CACHE_HOME/dmkit`, else
/// `$HOME/.cache/dmkit`.
pub fn cache_dir() -> Option<PathBuf> {
    let var = |k| std::env::var_os(k).filter(|v| !v.is_empty()).map(PathBuf::from);
    var(CACHE_DIR_ENV)
        .or_else(|| var("XDG_CACHE_HOME").map(|d| d.join("dmkit")))
        .or_else(|| var("HOME").map(|d| d.join(".cache").join("dmkit")))
}

/// The process-wide default fixed-b table, simulated once and then read
/// back from [`cache_dir`].
pub fn default_fixed_b_table() -> Result<&'static CriticalValueTable> {
    if let Some(t) = DEFAULT_TABLE.get() {
        return Ok(t);
    }
    let dir = cache_dir();
    let t = load_or_build_fixed_b(dir.as_deref(), DEFAULT_TABLE_PATHS, DEFAULT_GRID, DEFAULT_TABLE_SEED)?;
    Ok(DEFAULT_TABLE.get_or_init(|| t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, quantile, variance};
    use approx::assert_abs_diff_eq;

    fn injected(f: impl Fn(f64) -> f64, grid: usize) -> OuPath {
        OuPath::from_values((0..=grid).map(|k| f(k as f64 / grid as f64)).collect(), 0.0).unwrap()
    }

    #[test]
    fn path_starts_at_zero() {
        for seed in 0..20 {
            assert_eq!(simulate_ou_path(-3.0, 128, seed).unwrap().values[0], 0.0);
        }
        assert!(simulate_ou_path(0.5, 128, 1).is_err());
        assert!(simulate_ou_path(-1.0, 32, 1).is_err());
    }

    #[test]
    fn brownian_increments() {
        let p = simulate_ou_path(0.0, 4096, 9).unwrap();
        let inc: Vec<f64> = p.values.windows(2).map(|w| w[1] - w[0]).collect();
        let v = variance(&inc);
        assert!((v * 4096.0 - 1.0).abs() < 0.1, "scaled increment variance {}", v * 4096.0);
        // lag-1 correlation of increments ≈ 0
        let m = mean(&inc);
        let c1: f64 = inc.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / inc.len() as f64;
        assert!((c1 / v).abs() < 0.05);
    }

    #[test]
    fn degenerate_and_ramp_paths() {
        let zero = injected(|_| 0.0, 256);
        let f = limit_functionals(&zero, 0.3, 4).unwrap();
        assert_eq!((f.mean_jc, f.int_jc_sq, f.q_a), (0.0, 0.0, 0.0));
        assert!(f.q_p.iter().all(|q| *q == 0.0));

        let ramp = injected(|r| r, 4096);
        let f = limit_functionals(&ramp, 0.25, 5).unwrap();
        assert_abs_diff_eq!(f.mean_jc, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.int_jc_sq, 1.0 / 3.0, epsilon = 1e-6);
        assert!(f.bridge.iter().all(|v| v.abs() < 1e-12));
        assert_abs_diff_eq!(f.q_a, 0.0, epsilon = 1e-12);
        assert!(f.q_p.iter().all(|q| q.abs() < 1e-12));
    }

    #[test]
    fn constant_path_has_unit_periodogram_functional() {
        let one = injected(|_| 1.0, 4096);
        let f = limit_functionals(&one, 0.5, 12).unwrap();
        for (k, v) in f.bridge.iter().enumerate() {
            assert_abs_diff_eq!(*v, 1.0 - k as f64 / 4096.0, epsilon = 1e-12);
        }
        for q in &f.q_p {
            assert_abs_diff_eq!(*q, 1.0, epsilon = 1e-6);
        }
    }

    /// Direct trapezoid evaluation of the Fourier integrals, used as an
    /// independent check on smooth bridges.
    fn q_p_trapezoid(bridge: &[f64], j: usize) -> f64 {
        let n = bridge.len() - 1;
        let w = 2.0 * PI * j as f64;
        let s: Vec<f64> = (0..=n).map(|k| (w * k as f64 / n as f64).sin() * bridge[k]).collect();
        let c: Vec<f64> = (0..=n).map(|k| (w * k as f64 / n as f64).cos() * bridge[k]).collect();
        w * w * (trapezoid(&s).powi(2) + trapezoid(&c).powi(2))
    }

    #[test]
    fn q_p_agrees_with_trapezoid_on_smooth_path() {
        let p = injected(|r| (3.0 * r).sin() + r * r, 8192);
        let f = limit_functionals(&p, 0.5, 4).unwrap();
        for j in 1..=4 {
            assert_abs_diff_eq!(f.q_p[j - 1], q_p_trapezoid(&f.bridge, j), epsilon = 1e-5);
        }
    }

    #[test]
    fn snap_metadata() {
        let p = injected(|r| r * (1.0 - r), 1024);
        let f = limit_functionals(&p, 6.0 / 44.0, 1).unwrap();
        assert_eq!(f.b_snapped, 139.0 / 1024.0);
        assert!(f.snap_distance >= 0.0 && f.snap_distance < 1.0 / 1024.0);
        assert!(limit_functionals(&p, 0.0, 1).is_err());
        assert!(limit_functionals(&p, 1.5, 1).is_err());
    }

    #[test]
    fn functionals_nonnegative_on_simulated_paths() {
        for seed in 0..200 {
            let p = simulate_ou_path(-(seed as f64 % 7.0) * 3.0, 256, seed).unwrap();
            for b in [0.05, 0.3, 1.0] {
                let f = limit_functionals(&p, b, 6).unwrap();
                assert!(f.q_a >= -1e-12);
                assert!(f.q_p.iter().all(|q| *q >= -1e-12));
                assert!(f.int_jc_sq >= f.mean_jc * f.mean_jc - 1e-12);
            }
        }
    }

    #[test]
    fn brownian_mean_variance_is_one_third() {
        let draws: Vec<f64> = (0..20_000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = SeedStream::new(77).rng(i);
                trapezoid(&ou_values(0.0, 256, &mut rng))
            })
            .collect();
        assert!((variance(&draws) - 1.0 / 3.0).abs() < 0.02 / 3.0 * 3.0);
    }

    #[test]
    fn ou_terminal_law() {
        for c in [0.0, -5.0, -20.0] {
            let draws: Vec<f64> = (0..50_000u64)
                .into_par_iter()
                .map(|i| *ou_values(c, 64, &mut SeedStream::new(5).rng(i)).last().unwrap())
                .collect();
            let target = if c == 0.0 { 1.0 } else { ((2.0 * c).exp() - 1.0) / (2.0 * c) };
            let m = mean(&draws);
            let v = variance(&draws);
            assert!(m.abs() < 3.0 * (v / draws.len() as f64).sqrt());
            assert!((v / target - 1.0).abs() < 0.03, "c = {c}: {v} vs {target}");
        }
    }

    #[test]
    fn thm1_p_is_bandwidth_free_and_deterministic() {
        let a = sample_limit_statistic(0.0, LimitRegime::Thm1P, 500, 128, 4).unwrap();
        let b = sample_limit_statistic(0.0, LimitRegime::Thm1P, 500, 128, 4).unwrap();
        assert_eq!(a, b);
        let a1 = sample_limit_statistic(0.0, LimitRegime::Thm1A, 500, 128, 4).unwrap();
        for (x, y) in a.iter().zip(&a1) {
            assert_abs_diff_eq!(*x, y * 2f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn thm2_p_tails_thicker_than_t() {
        let draws = sample_limit_statistic(0.0, LimitRegime::Thm2P { m: 3 }, 20_000, 512, 8).unwrap();
        let abs: Vec<f64> = draws.iter().map(|v| v.abs()).collect();
        let q = quantile(&abs, 0.95);
        let t6 = crate::dm::student_t_quantile(0.975, 6.0).unwrap();
        assert!(q > t6, "{q} vs {t6}");
    }

    #[test]
    fn printed_bridge_form_has_thin_tails() {
        // documents why the levels form is the sampled Thm2P law
        let draws = sample_limit_statistic(0.0, LimitRegime::Thm2PAsPrinted { m: 3 }, 5_000, 256, 8).unwrap();
        let abs: Vec<f64> = draws.iter().map(|v| v.abs()).collect();
        assert!(quantile(&abs, 0.95) < crate::dm::student_t_quantile(0.975, 6.0).unwrap());
    }

    /// Finite-sample DM statistics on long random walks, computed through the
    /// public estimators, approach the sampled levels limits.
    #[test]
    fn thm2_limits_match_finite_sample_dm() {
        use crate::dm::{dm_a, dm_p, CvRegime};
        use crate::series::{LossDifferential, Series};
        let t = 2000;
        let finite: Vec<(f64, f64)> = (0..4000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = SeedStream::new(91).rng(i);
                let mut y = 0.0;
                let v: Vec<f64> = (0..t)
                    .map(|_| {
                        y += rng.sample::<f64, _>(StandardNormal);
                        y
                    })
                    .collect();
                let d = LossDifferential::from_series(Series::new(v).unwrap());
                let p = dm_p(&d, 3, CvRegime::StandardNormal).unwrap().statistic.abs();
                let a = dm_a(&d, t / 2, CvRegime::StandardNormal).unwrap().statistic.abs();
                (p, a)
            })
            .collect();
        let fp: Vec<f64> = finite.iter().map(|x| x.0).collect();
        let fa: Vec<f64> = finite.iter().map(|x| x.1).collect();
        let lp: Vec<f64> = sample_limit_statistic(0.0, LimitRegime::Thm2P { m: 3 }, 4000, 1024, 92)
            .unwrap()
            .iter()
            .map(|v| v.abs())
            .collect();
        let la: Vec<f64> = sample_limit_statistic(0.0, LimitRegime::Thm2A { b: 0.5 }, 4000, 1024, 93)
            .unwrap()
            .iter()
            .map(|v| v.abs())
            .collect();
        for (f, l) in [(&fp, &lp), (&fa, &la)] {
            for p in [0.5, 0.9] {
                let (qf, ql) = (quantile(f, p), quantile(l, p));
                assert!((qf / ql - 1.0).abs() < 0.08, "p={p}: finite {qf} vs limit {ql}");
            }
        }
    }

    #[test]
    fn grid_refinement_is_small() {
        // coupled grids: the N-grid path is every second point of the 2N path
        let stats: Vec<(f64, f64)> = (0..20_000u64)
            .into_par_iter()
            .map(|i| {
                let fine = ou_values(-5.0, 2048, &mut SeedStream::new(15).rng(i));
                let coarse: Vec<f64> = fine.iter().step_by(2).copied().collect();
                let tw_f = Twiddles::new(2048);
                let tw_c = Twiddles::new(1024);
                let f = OuPath { values: fine, c: -5.0, seed: None };
                let c = OuPath { values: coarse, c: -5.0, seed: None };
                (statistic(&c, LimitRegime::Thm2P { m: 3 }, &tw_c), statistic(&f, LimitRegime::Thm2P { m: 3 }, &tw_f))
            })
            .collect();
        let a: Vec<f64> = stats.iter().map(|s| s.0.abs()).collect();
        let b: Vec<f64> = stats.iter().map(|s| s.1.abs()).collect();
        let (qa, qb) = (quantile(&a, 0.95), quantile(&b, 0.95));
        assert!((qa / qb - 1.0).abs() < 0.01, "{qa} vs {qb}");
    }

    #[test]
    fn cv_table_shape() {
        let t = cv_fixed_b(&[0.1, 0.5, 1.0], &[0.10, 0.05], 2000, 128, 3).unwrap();
        assert_eq!(t.entries.len(), 6);
        for e in &t.entries {
            assert!(e.quantile > 1.0);
        }
        assert!(cv_fixed_b(&[0.0], &[0.05], 10, 128, 3).is_err());
    }

    #[test]
    fn limit_quantile_diagnostics() {
        let rows = limit_quantiles(&[0.0, -5.0], &[LimitRegime::Thm1P, LimitRegime::Thm2P { m: 1 }], &DIAGNOSTIC_PROBS, 500, 128, 3).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 5);
        for w in rows.chunks(5) {
            assert!(w.windows(2).all(|p| p[0].quantile <= p[1].quantile));
        }
        let mut buf = Vec::new();
        write_limit_quantiles_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 21);
        assert!(limit_quantiles(&[0.0], &[LimitRegime::Thm1A], &[1.0], 10, 64, 1).is_err());
    }
}
