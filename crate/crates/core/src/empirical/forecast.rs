//! Rolling-window forecasts: AR(1), rolling average and a constant.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::data::{Quarter, QuarterlySeries};
use crate::error::{DmError, Result};
use crate::series::ols_fit;

pub const DEFAULT_WINDOW: usize = 40;
pub const INFLATION_TARGET: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ar1,
    RollingAverage,
    Constant(f64),
}

impl Method {
    /// Short name used in output files.
    pub fn name(&self) -> String {
        match self {
            Method::Ar1 => "ar1".into(),
            Method::RollingAverage => "ra".into(),
            Method::Constant(c) if *c == INFLATION_TARGET => "2pct".into(),
            Method::Constant(c) => format!("const_{c}"),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Ar1 => write!(f, "AR(1)"),
            Method::RollingAverage => write!(f, "RA"),
            Method::Constant(c) => write!(f, "{c}%"),
        }
    }
}

/// Multi-step AR(1) forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ar1Mode {
    /// One-step model iterated forward: `ŷ = â Σ_{j<h} b̂^j + b̂^h y_t`.
    #[default]
    Iterated,
    /// `y_{s}` regressed on `y_{s−h}` within the window.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastSpec {
    pub method: Method,
    pub ar1_mode: Ar1Mode,
    pub horizon: usize,
    /// Window length in quarters, ending at the forecast origin.
    pub window: usize,
    pub eval_start: Quarter,
    pub eval_end: Quarter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub origin: Quarter,
    pub target: Quarter,
    pub forecast: f64,
    pub realized: f64,
    /// `realized − forecast`.
    pub error: f64,
    /// AR(1) slope estimate at this origin.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPanel {
    pub spec: ForecastSpec,
    pub rows: Vec<ForecastRow>,
    /// Origins whose AR(1) slope satisfies `|b̂| ≥ 1`; forecasts are still
    /// produced by iterating the estimate as is.
    pub explosive_origins: Vec<Quarter>,
}

impl ForecastPanel {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn targets(&self) -> Vec<Quarter> {
        self.rows.iter().map(|r| r.target).collect()
    }
}

/// `(â, b̂)` from regressing `y[lag..]` on `y[..n−lag]`.
fn ar_fit(window: &[f64], lag: usize) -> Result<(f64, f64)> {
    let n = window.len();
    let fit = ols_fit(&window[lag..], &[&window[..n - lag]], true).map_err(|e| match e {
        DmError::DegenerateDesign(_) => DmError::DegenerateDesign("constant series in the estimation window".into()),
        other => other,
    })?;
    Ok((fit.coefficients[0], fit.coefficients[1]))
}

/// Mean taken relative to the first value: exact for constant windows.
fn window_mean(w: &[f64]) -> f64 {
    w[0] + w.iter().map(|v| v - w[0]).sum::<f64>() / w.len() as f64
}

fn iterate(a: f64, b: f64, y: f64, h: usize) -> f64 {
    // equal to μ̂ + b̂^h (y − μ̂) when b̂ ≠ 1, and defined for b̂ = 1
    let mut f = y;
    for _ in 0..h {
        f = a + b * f;
    }
    f
}

/// Forecasts every target quarter in `[eval_start, eval_end]` from origin
/// `target − h`, using the `window` observations ending at the origin.
pub fn rolling_forecast(y: &QuarterlySeries, spec: &ForecastSpec) -> Result<ForecastPanel> {
    let h = spec.horizon;
    if h == 0 {
        return Err(DmError::InvalidParameter("horizon must be ≥ 1".into()));
    }
    if spec.eval_end < spec.eval_start {
        return Err(DmError::InvalidParameter(format!(
            "evaluation end {} precedes start {}",
            spec.eval_end, spec.eval_start
        )));
    }
    let min_window = match (spec.method, spec.ar1_mode) {
        (Method::Ar1, Ar1Mode::Iterated) => 3,
        (Method::Ar1, Ar1Mode::Direct) => h + 3,
        _ => 1,
    };
    if spec.window < min_window {
        return Err(DmError::TooShort { needed: min_window, got: spec.window });
    }
    let first_needed = spec.eval_start.offset(-(h as i64) - (spec.window as i64 - 1));
    if first_needed < y.start {
        return Err(DmError::InvalidParameter(format!(
            "inflation starts at {}; a {}-quarter window for target {} at h = {h} needs data from {first_needed}",
            y.start, spec.window, spec.eval_start
        )));
    }
    if spec.eval_end > y.end() {
        return Err(DmError::InvalidParameter(format!(
            "inflation ends at {}, before the evaluation end {}",
            y.end(),
            spec.eval_end
        )));
    }
    let count = spec.eval_start.until(spec.eval_end) as usize + 1;
    let mut rows = Vec::with_capacity(count);
    let mut explosive = Vec::new();
    for k in 0..count {
        let target = spec.eval_start.offset(k as i64);
        let origin = target.offset(-(h as i64));
        let o = y.position(origin).expect("range checked");
        let window = &y.values[o + 1 - spec.window..=o];
        let last = window[window.len() - 1];
        let (forecast, slope) = match spec.method {
            Method::Constant(c) => (c, None),
            Method::RollingAverage => (window_mean(window), None),
            Method::Ar1 => {
                let (a, b) = match spec.ar1_mode {
                    Ar1Mode::Iterated => ar_fit(window, 1)?,
                    Ar1Mode::Direct => ar_fit(window, h)?,
                };
                if b.abs() >= 1.0 {
                    explosive.push(origin);
                }
                let f = match spec.ar1_mode {
                    Ar1Mode::Iterated => iterate(a, b, last, h),
                    Ar1Mode::Direct => a + b * last,
                };
                (f, Some(b))
            }
        };
        let realized = y.get(target).expect("range checked");
        rows.push(ForecastRow { origin, target, forecast, realized, error: realized - forecast, slope });
    }
    Ok(ForecastPanel { spec: *spec, rows, explosive_origins: explosive })
}
