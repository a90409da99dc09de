//! Price-index ingestion and quarterly year-on-year inflation.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{DmError, Result};

/// FRED's marker for a missing observation.
pub const FRED_MISSING: &str = ".";

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(DmError::InvalidParameter(format!("month {month} outside 1..=12")));
        }
        Ok(Self { year, month })
    }

    fn index(self) -> i64 {
        self.year as i64 * 12 + self.month as i64 - 1
    }

    fn from_index(i: i64) -> Self {
        Self { year: i.div_euclid(12) as i32, month: (i.rem_euclid(12) + 1) as u32 }
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_index(self.index() + months)
    }

    pub fn quarter(self) -> Quarter {
        Quarter { year: self.year, q: ((self.month - 1) / 3 + 1) as u8 }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// A calendar quarter, `q ∈ 1..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quarter {
    pub year: i32,
    pub q: u8,
}

impl Quarter {
    pub fn new(year: i32, q: u8) -> Result<Self> {
        if !(1..=4).contains(&q) {
            return Err(DmError::InvalidParameter(format!("quarter {q} outside 1..=4")));
        }
        Ok(Self { year, q })
    }

    pub fn index(self) -> i64 {
        self.year as i64 * 4 + self.q as i64 - 1
    }

    pub fn from_index(i: i64) -> Self {
        Self { year: i.div_euclid(4) as i32, q: (i.rem_euclid(4) + 1) as u8 }
    }

    pub fn offset(self, quarters: i64) -> Self {
        Self::from_index(self.index() + quarters)
    }

    /// Quarters from `self` to `other` (positive if `other` is later).
    pub fn until(self, other: Quarter) -> i64 {
        other.index() - self.index()
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.q)
    }
}

impl FromStr for Quarter {
    type Err = DmError;

    /// Accepts `2010Q1`, `2010.Q1`, `2010-Q1` and `2010q1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || DmError::Parse(format!("invalid quarter '{s}' (expected e.g. 2010Q1)"));
        let upper = s.trim().to_ascii_uppercase();
        let (y, q) = upper.split_once('Q').ok_or_else(bad)?;
        let y = y.trim_end_matches(['.', '-', ' ']);
        let year: i32 = y.parse().map_err(|_| bad())?;
        let q: u8 = q.parse().map_err(|_| bad())?;
        Quarter::new(year, q).map_err(|_| bad())
    }
}

/// A gap-free monthly series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    pub start: YearMonth,
    pub values: Vec<f64>,
}

impl MonthlySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> YearMonth {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn month(&self, i: usize) -> YearMonth {
        self.start.offset(i as i64)
    }
}

/// A gap-free quarterly series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterlySeries {
    pub start: Quarter,
    pub values: Vec<f64>,
}

impl QuarterlySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> Quarter {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn quarter(&self, i: usize) -> Quarter {
        self.start.offset(i as i64)
    }

    pub fn position(&self, q: Quarter) -> Option<usize> {
        let i = self.start.until(q);
        (i >= 0 && (i as usize) < self.values.len()).then_some(i as usize)
    }

    pub fn get(&self, q: Quarter) -> Option<f64> {
        self.position(q).map(|i| self.values[i])
    }
}

fn parse_date(s: &str) -> Option<YearMonth> {
    let s = s.trim();
    let d = NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d"))
        .ok()?;
    Some(YearMonth { year: d.year(), month: d.month() })
}

/// Parses a two-column `date,value` CSV with a header row. Dates are ISO
/// (`YYYY-MM-DD` or `YYYY-MM`) and must be strictly increasing months
/// without gaps.
pub fn parse_price_csv<R: Read>(reader: R) -> Result<MonthlySeries> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<(YearMonth, f64, u64)> = Vec::new();
    let mut missing = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() < 2 {
            return Err(DmError::Parse(format!("line {line}: expected date and value columns")));
        }
        let month = parse_date(&rec[0])
            .ok_or_else(|| DmError::Parse(format!("line {line}: unparseable date '{}'", &rec[0])))?;
        if &rec[1] == FRED_MISSING {
            missing.push(line);
            continue;
        }
        let value: f64 = rec[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| DmError::Parse(format!("line {line}: unparseable value '{}'", &rec[1])))?;
        rows.push((month, value, line));
    }
    if !missing.is_empty() {
        return Err(DmError::Parse(format!(
            "{} row(s) carry the missing-value marker '{FRED_MISSING}' (first at line {})",
            missing.len(),
            missing[0]
        )));
    }
    let (start, _, _) = *rows.first().ok_or_else(|| DmError::Parse("no observations".into()))?;
    for w in rows.windows(2) {
        let (prev, cur) = (w[0].0, w[1].0);
        if cur <= prev {
            return Err(DmError::Parse(format!("line {}: dates not increasing ({cur} after {prev})", w[1].2)));
        }
        if cur != prev.offset(1) {
            return Err(DmError::Gap(format!("missing month {}", prev.offset(1))));
        }
    }
    Ok(MonthlySeries { start, values: rows.into_iter().map(|r| r.1).collect() })
}

/// Loads a price index from a local CSV path or, with the `fetch` feature,
/// an `http(s)` URL returning the same format.
pub fn load_price_index(source: &str) -> Result<MonthlySeries> {
    if source.starts_with("http://") || source.starts_with("https://") {
        return fetch(source);
    }
    parse_price_csv(std::fs::File::open(Path::new(source))?)
}

#[cfg(feature = "fetch")]
fn fetch(url: &str) -> Result<MonthlySeries> {
    let resp = ureq::get(url).call().map_err(|e| DmError::Io(format!("GET {url}: {e}")))?;
    parse_price_csv(resp.into_reader())
}

#[cfg(not(feature = "fetch"))]
fn fetch(url: &str) -> Result<MonthlySeries> {
    Err(DmError::Io(format!("cannot fetch {url}: built without the `fetch` feature; download the CSV and pass its path")))
}

/// How three monthly index values become one quarterly value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    EndOfQuarter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// `100 (P_q / P_{q−4} − 1)`.
    #[default]
    Simple,
    /// `100 ln(P_q / P_{q−4})`.
    Log,
}

/// Aggregates complete calendar quarters and returns year-on-year
/// inflation in percent, starting four quarters after the first complete
/// quarter. Incomplete leading or trailing quarters are dropped.
pub fn to_quarterly_yoy(monthly: &MonthlySeries, aggregation: Aggregation, growth: Growth) -> Result<QuarterlySeries> {
    if let Some(i) = monthly.values.iter().position(|v| !(*v > 0.0)) {
        return Err(DmError::InvalidParameter(format!("non-positive index value in {}", monthly.month(i))));
    }
    let skip = ((3 - (monthly.start.month as usize - 1) % 3) % 3).min(monthly.len());
    let months = &monthly.values[skip..];
    let levels: Vec<f64> = months
        .chunks_exact(3)
        .map(|c| match aggregation {
            Aggregation::Mean => (c[0] + c[1] + c[2]) / 3.0,
            Aggregation::EndOfQuarter => c[2],
        })
        .collect();
    if levels.len() < 5 {
        return Err(DmError::TooShort { needed: 5, got: levels.len() });
    }
    let first = monthly.start.offset(skip as i64).quarter();
    let values = levels
        .windows(5)
        .map(|w| match growth {
            Growth::Simple => 100.0 * (w[4] / w[0] - 1.0),
            Growth::Log => 100.0 * (w[4] / w[0]).ln(),
        })
        .collect();
    Ok(QuarterlySeries { start: first.offset(4), values })
}
