//! Symbolic bandwidth rules such as `T^{1/3}`, evaluated with an exact
//! integer floor.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DmError, Result};

/// `⌊T^{num/den}⌋`; `1` is `num = 0` and `T` is `num = den = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BandwidthRule {
    pub num: u32,
    pub den: u32,
}

impl BandwidthRule {
    pub const ONE: Self = Self { num: 0, den: 1 };
    pub const FULL: Self = Self { num: 1, den: 1 };

    pub const fn power(num: u32, den: u32) -> Self {
        Self { num, den }
    }

    /// Largest integer `k` with `k^den ≤ T^num`.
    pub fn evaluate(&self, len: usize) -> usize {
        if self.num == 0 {
            return 1;
        }
        let target = (len as u128).checked_pow(self.num);
        let approx = (len as f64).powf(self.num as f64 / self.den as f64).floor() as u128;
        let Some(target) = target else {
            return approx as usize;
        };
        let fits = |k: u128| k.checked_pow(self.den).is_some_and(|p| p <= target);
        let mut k = approx.saturating_sub(1);
        while fits(k + 1) {
            k += 1;
        }
        while k > 0 && !fits(k) {
            k -= 1;
        }
        k as usize
    }

    /// Label used in table headers.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.num, self.den) {
            (0, _) => write!(f, "1"),
            (n, d) if n == d => write!(f, "T"),
            (n, d) => write!(f, "T^{{{n}/{d}}}"),
        }
    }
}

impl FromStr for BandwidthRule {
    type Err = DmError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "1" {
            return Ok(Self::ONE);
        }
        if t == "T" {
            return Ok(Self::FULL);
        }
        let bad = || DmError::Parse(format!("bad bandwidth rule '{s}'"));
        let exp = t.strip_prefix("T^").ok_or_else(bad)?;
        let exp = exp.trim_start_matches('{').trim_end_matches('}');
        let exp = exp.trim_start_matches('(').trim_end_matches(')');
        let (n, d) = exp.split_once('/').ok_or_else(bad)?;
        let num: u32 = n.trim().parse().map_err(|_| bad())?;
        let den: u32 = d.trim().parse().map_err(|_| bad())?;
        if den == 0 || num > den {
            return Err(bad());
        }
        Ok(Self { num, den })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_floors() {
        let r = |s: &str| s.parse::<BandwidthRule>().unwrap();
        assert_eq!(r("T^{1/3}").evaluate(27), 3);
        assert_eq!(r("T^{1/3}").evaluate(64), 4);
        assert_eq!(r("T^{2/3}").evaluate(125), 25);
        assert_eq!(r("T^{1/2}").evaluate(49), 7);
        assert_eq!(r("T^{1/4}").evaluate(81), 3);
        assert_eq!(r("T").evaluate(44), 44);
        assert_eq!(r("1").evaluate(44), 1);
    }

    #[test]
    fn paper_sample_sizes() {
        let r = |s: &str| s.parse::<BandwidthRule>().unwrap();
        let ev = |rules: &[&str], t| rules.iter().map(|s| r(s).evaluate(t)).collect::<Vec<_>>();
        assert_eq!(ev(&["T^{2/9}", "T^{1/3}", "T^{1/2}", "T"], 44), vec![2, 3, 6, 44]);
        assert_eq!(ev(&["1", "T^{1/4}", "T^{1/3}", "T^{1/2}", "T^{2/3}"], 44), vec![1, 2, 3, 6, 12]);
        assert_eq!(ev(&["T^{1/4}", "T^{2/9}", "T^{1/3}", "T^{1/2}"], 50), vec![2, 2, 3, 7]);
        assert_eq!(ev(&["T^{1/4}", "T^{2/9}", "T^{1/3}", "T^{1/2}", "T^{2/3}"], 100), vec![3, 2, 4, 10, 21]);
    }

    #[test]
    fn parse_display_roundtrip() {
        for s in ["1", "T", "T^{2/9}", "T^{1/4}", "T^{2/3}"] {
            assert_eq!(s.parse::<BandwidthRule>().unwrap().to_string(), s);
        }
        assert_eq!("T^(1/2)".parse::<BandwidthRule>().unwrap(), BandwidthRule::power(1, 2));
        assert!("T^{3/2}".parse::<BandwidthRule>().is_err());
        assert!("M".parse::<BandwidthRule>().is_err());
    }
}
