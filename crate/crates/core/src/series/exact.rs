use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::prob::Prob;

/// Exact rational in `[0, 1]`, always in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactProb(BigRational);

impl ExactProb {
    pub(crate) fn from_parts(num: BigUint, den: BigUint) -> Self {
        ExactProb(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn one() -> Self {
        ExactProb(BigRational::one())
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Natural log; works for values far below `f64::MIN_POSITIVE`.
    pub fn ln(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        ln_big(self.0.numer().magnitude()) - ln_big(self.0.denom().magnitude())
    }
}

impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for ExactProb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

pub(crate) fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact binomial coefficient by the multiplicative formula.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// Row `n` of Pascal's triangle, built left to right.
pub(crate) fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * (n - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

fn powers(base: &BigUint, n: u64) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = BigUint::one();
    out.push(acc.clone());
    for _ in 0..n {
        acc *= base;
        out.push(acc.clone());
    }
    out
}

/// Integer weights `C(n, k) a^k (b - a)^(n - k)`; each `P(n, k)` is the
/// weight divided by `b^n`.
pub(crate) fn row_weights(n: u64, a: &BigUint, b: &BigUint) -> Vec<BigUint> {
    let c = b - a;
    let pa = powers(a, n);
    let pc = powers(&c, n);
    binomial_row(n)
        .into_iter()
        .enumerate()
        .map(|(k, binom)| binom * &pa[k] * &pc[n as usize - k])
        .collect()
}

fn prob_parts(p: Prob) -> (BigUint, BigUint) {
    (BigUint::from(p.numer()), BigUint::from(p.denom()))
}

/// `P(n, k)^d` exactly.
pub fn term(n: u64, k: u64, d: u32, p: Prob) -> Result<ExactProb> {
    if k > n {
        return Err(Error::OutOfRange { k: k as usize, n: n as usize });
    }
    let (a, b) = prob_parts(p);
    let c = &b - &a;
    let w = binomial(n, k) * a.pow(k as u32) * c.pow((n - k) as u32);
    Ok(ExactProb::from_parts(w.pow(d), b.pow((n * d as u64) as u32)))
}

/// `R_d(n)` for a rational `p = a / b` given as big integers.
pub fn rd_exact_big(n: u64, d: u32, a: &BigUint, b: &BigUint) -> ExactProb {
    let num: BigUint = row_weights(n, a, b).iter().map(|w| w.pow(d)).sum();
    ExactProb::from_parts(num, b.pow((n * d as u64) as u32))
}

pub fn rd_exact(n: u64, d: u32, p: Prob) -> ExactProb {
    let (a, b) = prob_parts(p);
    rd_exact_big(n, d, &a, &b)
}

/// `sum_k P(n, k)`, which is one for every row.
pub fn row_normalization(n: u64, p: Prob) -> ExactProb {
    rd_exact(n, 1, p)
}
