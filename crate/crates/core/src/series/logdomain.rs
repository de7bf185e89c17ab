use serde::{Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::prob::Prob;

/// Probability stored as its natural log. `-inf` is zero.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(ln <= 1e-12 || ln.is_nan(), "log-probability {ln} above zero");
        LogProb(ln.min(0.0))
    }

    pub fn zero() -> Self {
        LogProb(f64::NEG_INFINITY)
    }

    pub fn one() -> Self {
        LogProb(0.0)
    }

    pub fn ln(&self) -> f64 {
        self.0
    }

    pub fn exp(&self) -> f64 {
        self.0.exp()
    }
}

impl Serialize for LogProb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

/// Table of `ln k!` for `k = 0..=n`, from `ln Γ(k + 1)`.
#[derive(Clone, Debug)]
pub struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn up_to(n: u64) -> Self {
        LnFactorials((0..=n).map(|k| if k < 2 { 0.0 } else { ln_gamma(k as f64 + 1.0) }).collect())
    }

    pub fn max_n(&self) -> u64 {
        self.0.len() as u64 - 1
    }

    pub fn ln_factorial(&self, k: u64) -> f64 {
        self.0[k as usize]
    }

    pub fn ln_binomial(&self, n: u64, k: u64) -> f64 {
        self.0[n as usize] - self.0[k as usize] - self.0[(n - k) as usize]
    }
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln sum exp(x_i)`, shifted by the maximum so no term underflows to zero
/// before the largest ones are accounted for.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

pub(crate) struct LnRowParams {
    pub ln_p: f64,
    pub ln_q: f64,
}

impl LnRowParams {
    pub fn new(p: Prob) -> Self {
        LnRowParams { ln_p: p.to_f64().ln(), ln_q: p.complement().to_f64().ln() }
    }

    /// `ln P(n, k)`. Zero-count factors are skipped so `p = 0` or `p = 1`
    /// does not produce `0 * -inf`.
    pub fn ln_term(&self, fact: &LnFactorials, n: u64, k: u64) -> f64 {
        let mut t = fact.ln_binomial(n, k);
        if k > 0 {
            t += k as f64 * self.ln_p;
        }
        if n > k {
            t += (n - k) as f64 * self.ln_q;
        }
        t
    }

    pub fn ln_rd(&self, fact: &LnFactorials, n: u64, d: u32) -> f64 {
        let terms: Vec<f64> = (0..=n).map(|k| d as f64 * self.ln_term(fact, n, k)).collect();
        log_sum_exp(&terms).min(0.0)
    }
}

pub fn rd_log(n: u64, d: u32, p: Prob) -> LogProb {
    let fact = LnFactorials::up_to(n);
    LogProb::from_ln(LnRowParams::new(p).ln_rd(&fact, n, d))
}
