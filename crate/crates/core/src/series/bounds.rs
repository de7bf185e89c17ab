//! Numerical counterparts of the convergence and divergence arguments:
//! the location and size of the largest term in a row, the harmonic lower
//! bound for two queues, the normal approximation, and the elementary power
//! sum inequalities that tie them together.

use std::f64::consts::{E, PI};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::exact::{rd_exact, rd_exact_big};
use super::logdomain::ln_binomial;
use crate::error::{Error, Result};
use crate::prob::Prob;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakInfo {
    pub n: u64,
    pub p: Prob,
    pub eps: f64,
    /// `[n p - (1 - p), n p + p]`
    pub interval: (f64, f64),
    /// Leftmost maximiser of `P(n, k)` over `k`.
    pub k_hat: u64,
    /// Second maximiser when the row has a tie at the top.
    pub k_hat_tied: Option<u64>,
    /// Decided in exact integer arithmetic.
    pub in_interval: bool,
    pub peak: f64,
    pub ln_peak: f64,
    pub bound: f64,
    pub bound_holds: bool,
}

/// `(e^2 + eps) / (2 pi sqrt(n p (1 - p)))`
pub fn stirling_bound(n: u64, p: Prob, eps: f64) -> f64 {
    let pf = p.to_f64();
    (E * E + eps) / (2.0 * PI * (n as f64 * pf * (1.0 - pf)).sqrt())
}

pub fn peak_info(n: u64, p: Prob, eps: f64) -> PeakInfo {
    let a = p.numer() as i128;
    let b = p.denom() as i128;
    let c = b - a;
    let ni = n as i128;
    // P(n, k+1) / P(n, k) = (n - k) a / ((k + 1) c); the row is unimodal, so
    // the first k where the ratio drops to <= 1 is the leftmost maximum.
    let mut k_hat = n;
    let mut tied = None;
    for k in 0..n {
        let ki = k as i128;
        let up = (ni - ki) * a;
        let down = (ki + 1) * c;
        if up <= down {
            k_hat = k;
            if up == down {
                tied = Some(k + 1);
            }
            break;
        }
    }
    let in_range = |k: u64| {
        let kb = k as i128 * b;
        kb >= ni * a - c && kb <= (ni + 1) * a
    };
    let in_interval = in_range(k_hat) && tied.is_none_or(in_range);
    let pf = p.to_f64();
    let ln_peak = ln_binomial(n, k_hat)
        + if k_hat > 0 { k_hat as f64 * pf.ln() } else { 0.0 }
        + if n > k_hat { (n - k_hat) as f64 * (1.0 - pf).ln() } else { 0.0 };
    let peak = ln_peak.exp();
    let bound = stirling_bound(n, p, eps);
    PeakInfo {
        n,
        p,
        eps,
        interval: (n as f64 * pf - (1.0 - pf), n as f64 * pf + pf),
        k_hat,
        k_hat_tied: tied,
        in_interval,
        peak,
        ln_peak,
        bound,
        bound_holds: peak <= bound,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StirlingScan {
    pub p: Prob,
    pub eps: f64,
    pub n_limit: u64,
    /// Smallest `n` from which the bound held at every scanned row.
    pub n_scan: u64,
    /// `2 * n_scan`, the threshold reported for downstream use.
    pub n_threshold: u64,
    /// Rows in `1..=n_limit` where the bound failed.
    pub violations: Vec<u64>,
    /// Rows whose maximiser fell outside the predicted interval.
    pub interval_failures: Vec<u64>,
    /// Largest `peak / bound` over `n_threshold..=n_limit`.
    pub max_ratio_beyond_threshold: f64,
}

/// Scans rows `1..=n_limit` to find where the peak bound starts holding.
pub fn stirling_threshold(p: Prob, eps: f64, n_limit: u64) -> StirlingScan {
    let infos: Vec<PeakInfo> = (1..=n_limit).map(|n| peak_info(n, p, eps)).collect();
    let violations: Vec<u64> = infos.iter().filter(|i| !i.bound_holds).map(|i| i.n).collect();
    let interval_failures = infos.iter().filter(|i| !i.in_interval).map(|i| i.n).collect();
    let n_scan = violations.last().map_or(1, |&n| n + 1);
    let n_threshold = 2 * n_scan;
    let max_ratio_beyond_threshold = infos
        .iter()
        .filter(|i| i.n >= n_threshold)
        .map(|i| i.peak / i.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    StirlingScan {
        p,
        eps,
        n_limit,
        n_scan,
        n_threshold,
        violations,
        interval_failures,
        max_ratio_beyond_threshold,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct D2LowerBound {
    pub n_max: u64,
    /// `sum_{n <= n_max} 1 / (n + 1)`
    pub harmonic_sum: BigRational,
    /// `sum_{n <= n_max} R_2(n)` at `p = 1/2`.
    pub series_sum_half: BigRational,
    /// `sum_{n <= n_max} R_2(n)` at the requested `p`.
    pub series_sum_p: BigRational,
    /// First `n` with `R_2(n) < 1 / (n + 1)` at `p = 1/2`, if any.
    pub violation_half: Option<u64>,
    /// Same check at the requested `p`.
    pub violation_p: Option<u64>,
}

impl D2LowerBound {
    pub fn holds(&self) -> bool {
        self.violation_half.is_none() && self.violation_p.is_none()
    }
}

/// Each row of `n + 1` terms sums to one, so its squares sum to at least
/// `1 / (n + 1)`; summed over rows this is the harmonic series.
pub fn d2_lower_bound(n_max: u64, p: Prob) -> D2LowerBound {
    let mut harmonic = BigRational::zero();
    let mut sum_half = BigRational::zero();
    let mut sum_p = BigRational::zero();
    let mut violation_half = None;
    let mut violation_p = None;
    for n in 0..=n_max {
        let floor = BigRational::new(BigInt::one(), BigInt::from(n + 1));
        let r_half = rd_exact(n, 2, Prob::HALF).into_inner();
        let r_p = rd_exact(n, 2, p).into_inner();
        if violation_half.is_none() && r_half < floor {
            violation_half = Some(n);
        }
        if violation_p.is_none() && r_p < floor {
            violation_p = Some(n);
        }
        harmonic += floor;
        sum_half += r_half;
        sum_p += r_p;
    }
    D2LowerBound {
        n_max,
        harmonic_sum: harmonic,
        series_sum_half: sum_half,
        series_sum_p: sum_p,
        violation_half,
        violation_p,
    }
}

/// Normal approximation of `R_d(n)` at `p = 1/2`:
/// `d^(-1/2) * (2 / (pi n))^((d - 1) / 2)`. Diagnostic only.
pub fn clt_approx(n: u64, d: u32) -> f64 {
    (d as f64).powf(-0.5) * (2.0 / (PI * n as f64)).powf((d as f64 - 1.0) / 2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    pub n: u64,
    pub d: u32,
    /// `R_d(n; p) == R_d(n; 1 - p)`
    pub symmetric: bool,
    /// `R(1/2 + h) - R(1/2 - h)`
    pub central_difference: BigRational,
    /// `R(1/2 + h) - 2 R(1/2) + R(1/2 - h)`
    pub second_difference: BigRational,
    /// Row zero is identically one, so both differences vanish there.
    pub degenerate_row: bool,
}

impl SymmetryReport {
    pub fn passes(&self) -> bool {
        self.symmetric
            && self.central_difference.is_zero()
            && (self.degenerate_row || self.second_difference.is_positive())
    }
}

fn rd_at(n: u64, d: u32, num: &BigUint, den: &BigUint) -> BigRational {
    rd_exact_big(n, d, num, den).into_inner()
}

pub fn symmetry_and_convexity_check(n: u64, d: u32, p: Prob, h: Prob) -> Result<SymmetryReport> {
    let (pr, hr) = (p.to_big(), h.to_big());
    let half = Prob::HALF.to_big();
    let open = |x: &BigRational| x.is_positive() && x < &BigRational::one();
    if h.numer() == 0 || !open(&(&pr - &hr)) || !open(&(&pr + &hr)) || !open(&(&half - &hr)) {
        return Err(Error::InvalidParams(format!(
            "need 0 < p - h, p + h < 1 and h < 1/2 (p = {p}, h = {h})"
        )));
    }
    let symmetric = rd_exact(n, d, p) == rd_exact(n, d, p.complement());
    // 1/2 +- a/b = (b +- 2a) / 2b
    let a = BigUint::from(h.numer());
    let b = BigUint::from(h.denom());
    let den = &b * 2u32;
    let plus = rd_at(n, d, &(&b + &a * 2u32), &den);
    let minus = rd_at(n, d, &(&b - &a * 2u32), &den);
    let mid = rd_exact(n, d, Prob::HALF).into_inner();
    Ok(SymmetryReport {
        n,
        d,
        symmetric,
        central_difference: &plus - &minus,
        second_difference: &plus - &mid * BigRational::from_integer(2.into()) + &minus,
        degenerate_row: n == 0,
    })
}

/// Interior local extrema of `p -> R_d(n; p)` on the grid `p = i / grid`,
/// found in exact arithmetic.
pub fn extreme_point_scan(n: u64, d: u32, grid: u64) -> Vec<Prob> {
    let den = BigUint::from(grid);
    let vals: Vec<BigRational> = (1..grid).map(|i| rd_at(n, d, &BigUint::from(i), &den)).collect();
    vals.windows(3)
        .enumerate()
        .filter(|(_, w)| (w[1] > w[0] && w[1] >= w[2]) || (w[1] < w[0] && w[1] <= w[2]))
        .map(|(i, _)| Prob::new(i as u64 + 2, grid).expect("grid point in (0,1)"))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Report<T> {
    pub len: usize,
    pub d: u32,
    pub max: T,
    /// `sum x_i^d`
    pub power_sum: T,
    /// `max^(d-1)`
    pub power_bound: T,
    /// `sum x_i^2`
    pub square_sum: T,
    /// `len * mean^2`
    pub mean_bound: T,
    pub power_holds: bool,
    pub square_holds: bool,
}

impl<T> Lemma1Report<T> {
    pub fn holds(&self) -> bool {
        self.power_holds && self.square_holds
    }
}

/// For nonnegative `x` summing to one: `sum x_i^d <= max^(d-1)` and
/// `sum x_i^2 >= len * mean^2`. Checked in exact arithmetic.
pub fn lemma1_check(x: &[BigRational], d: u32) -> Result<Lemma1Report<BigRational>> {
    if x.is_empty() || d == 0 {
        return Err(Error::InvalidParams("need a nonempty vector and d >= 1".into()));
    }
    if x.iter().any(|v| v.is_negative()) {
        return Err(Error::InvalidParams("entries must be nonnegative".into()));
    }
    let total: BigRational = x.iter().sum();
    if !total.is_one() {
        return Err(Error::NotNormalized(total.to_string()));
    }
    let len = x.len();
    let max = x.iter().max().cloned().unwrap_or_else(BigRational::zero);
    let power_sum: BigRational = x.iter().map(|v| num_traits::pow(v.clone(), d as usize)).sum();
    let power_bound = num_traits::pow(max.clone(), d as usize - 1);
    let square_sum: BigRational = x.iter().map(|v| v * v).sum();
    let mean = total / BigRational::from_integer(BigInt::from(len));
    let mean_bound = &mean * &mean * BigRational::from_integer(BigInt::from(len));
    Ok(Lemma1Report {
        len,
        d,
        power_holds: power_sum <= power_bound,
        square_holds: square_sum >= mean_bound,
        max,
        power_sum,
        power_bound,
        square_sum,
        mean_bound,
    })
}

/// Floating-point variant; `tol` bounds both the normalisation error and the
/// slack allowed in each inequality.
pub fn lemma1_check_f64(x: &[f64], d: u32, tol: f64) -> Result<Lemma1Report<f64>> {
    if x.is_empty() || d == 0 {
        return Err(Error::InvalidParams("need a nonempty vector and d >= 1".into()));
    }
    if x.iter().any(|&v| v.is_nan() || v < 0.0) {
        return Err(Error::InvalidParams("entries must be nonnegative and finite".into()));
    }
    let total: f64 = x.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::NotNormalized(total.to_string()));
    }
    let len = x.len();
    let max = x.iter().copied().fold(0.0, f64::max);
    let power_sum: f64 = x.iter().map(|v| v.powi(d as i32)).sum();
    let power_bound = max.powi(d as i32 - 1);
    let square_sum: f64 = x.iter().map(|v| v * v).sum();
    let mean = total / len as f64;
    let mean_bound = len as f64 * mean * mean;
    Ok(Lemma1Report {
        len,
        d,
        power_holds: power_sum <= power_bound + tol,
        square_holds: square_sum + tol >= mean_bound,
        max,
        power_sum,
        power_bound,
        square_sum,
        mean_bound,
    })
}
