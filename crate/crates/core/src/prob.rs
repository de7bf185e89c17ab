//! Exact probabilities with small numerator and denominator.
//!
//! Parameters such as `p` and `m_bar` are kept as reduced fractions so that
//! the exact series back-end and the Bernoulli samplers see exactly the value
//! that was typed on the command line. `"1/2"`, `"0.5"` and `".50"` all parse
//! to the same value.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Prob {
    num: u64,
    den: u64,
}

impl Prob {
    pub const ZERO: Prob = Prob { num: 0, den: 1 };
    pub const ONE: Prob = Prob { num: 1, den: 1 };
    pub const HALF: Prob = Prob { num: 1, den: 2 };

    /// Builds `num/den` in lowest terms. Values outside `[0, 1]` are rejected.
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParams(format!("{num}/0 has a zero denominator")));
        }
        if num > den {
            return Err(Error::InvalidParams(format!("{num}/{den} exceeds one")));
        }
        let g = num.gcd(&den);
        Ok(Prob { num: num / g, den: den / g })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    /// `1 - p`.
    pub fn complement(&self) -> Prob {
        Prob { num: self.den - self.num, den: self.den }
    }

    pub fn is_open_unit(&self) -> bool {
        self.num > 0 && self.num < self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    /// Returns an error unless `0 < p < 1`.
    pub fn require_open_unit(self, name: &str) -> Result<Self> {
        if self.is_open_unit() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(format!("{name} = {self} must lie strictly between 0 and 1")))
        }
    }
}

impl PartialOrd for Prob {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Prob {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl From<Prob> for String {
    fn from(p: Prob) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Prob {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Prob {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let fail = |reason: &str| Error::Parse { input: s.to_string(), reason: reason.to_string() };
        if s.is_empty() {
            return Err(fail("empty string"));
        }
        if let Some((n, d)) = s.split_once('/') {
            let num: u64 = n.trim().parse().map_err(|_| fail("numerator is not a nonnegative integer"))?;
            let den: u64 = d.trim().parse().map_err(|_| fail("denominator is not a positive integer"))?;
            return Prob::new(num, den).map_err(|e| fail(&e.to_string()));
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(fail("no digits"));
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(fail("expected `a/b` or a plain decimal such as 0.25"));
        }
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.len() > 18 {
            return Err(fail("more than 18 significant decimal places"));
        }
        let den = 10u64.pow(frac_part.len() as u32);
        let int: u64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| fail("integer part too large"))? };
        let frac: u64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| fail("bad fraction"))? };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(|| fail("value exceeds one"))?;
        Prob::new(num, den).map_err(|e| fail(&e.to_string()))
    }
}
