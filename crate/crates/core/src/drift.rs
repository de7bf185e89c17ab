//! Lyapunov drift of the three-queue excess walk at `p = 1/2`.
//!
//! The test function is `f(q) = ln ln(e + rho(q))` where `rho` is the squared
//! distance from `q` to the main diagonal. It is a class function on
//! `Z^3 / <1>`, its sublevel sets are finite, and its expected one-step
//! change is negative everywhere except on a small set around the origin.
//! That is the non-transience certificate this module checks numerically.
//!
//! Geometry: classes live in the plane orthogonal to `(1, 1, 1)`. With the
//! orthonormal basis `(2, -1, -1)/sqrt 6` and `(0, 1, -1)/sqrt 2`, the
//! projected unit vectors sit at 0, 120 and 240 degrees and have length
//! `sqrt(2/3)`, so one arrival moves the walk by [`LATTICE_STEP`] in one of six
//! directions spaced 60 degrees apart, and `r = sqrt(rho)` exactly.

use std::f64::consts::{E, PI};

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quotient::{canonicalize, ExcessState};

/// Plane distance covered by one non-idle step of the excess walk.
pub const LATTICE_STEP: f64 = 0.816_496_580_927_726; // sqrt(2/3)

/// Default cap on the number of states a scan may visit.
pub const DEFAULT_MAX_STATES: u64 = 20_000_000;

/// `3 * rho(q)`, an integer.
pub fn rho_thirds(q: &[i64; 3]) -> i64 {
    let (a, b, c) = (q[0] - q[1], q[0] - q[2], q[1] - q[2]);
    a * a + b * b + c * c
}

/// `q.q - (q.1)^2 / 3`, exactly.
pub fn rho(q: &[i64; 3]) -> Rational64 {
    Rational64::new(rho_thirds(q), 3)
}

/// `ln ln(e + rho)`, written as `ln_1p(ln_1p(rho / e))` so it is exactly zero
/// at the origin and accurate for small `rho`.
pub fn f_of_rho(rho: f64) -> f64 {
    (rho / E).ln_1p().ln_1p()
}

pub fn f(q: &[i64; 3]) -> f64 {
    f_of_rho(rho_thirds(q) as f64 / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovValue {
    pub rho: f64,
    pub rho_thirds: i64,
    pub f: f64,
}

pub fn lyapunov(q: &[i64; 3]) -> LyapunovValue {
    let t = rho_thirds(q);
    LyapunovValue { rho: t as f64 / 3.0, rho_thirds: t, f: f_of_rho(t as f64 / 3.0) }
}

/// `f(rho_to) - f(rho_from)` without cancellation. With `L = ln(e + rho)`:
/// `L_to - L_from = ln_1p(dr / (e + rho_from))` and
/// `f_to - f_from = ln_1p((L_to - L_from) / L_from)`.
fn f_increment(from_thirds: i64, to_thirds: i64) -> f64 {
    if from_thirds == to_thirds {
        return 0.0;
    }
    let rho_from = from_thirds as f64 / 3.0;
    let dr = (to_thirds - from_thirds) as f64 / 3.0;
    let l_from = (rho_from / E).ln_1p() + 1.0;
    let dl = (dr / (E + rho_from)).ln_1p();
    (dl / l_from).ln_1p()
}

/// Expected one-step change of `f` from class `x` when every queue receives a
/// customer with probability 1/2: the mean over the eight arrival patterns.
pub fn delta_f(x: &[i64; 3]) -> f64 {
    let t0 = rho_thirds(x);
    let mut sum = 0.0;
    for mask in 0u32..8 {
        let y = [
            x[0] + i64::from(mask & 1),
            x[1] + i64::from(mask >> 1 & 1),
            x[2] + i64::from(mask >> 2 & 1),
        ];
        sum += f_increment(t0, rho_thirds(&y));
    }
    sum / 8.0
}

/// Largest single-step `|f(next) - f(x)|` over the eight patterns.
pub fn max_step_change(x: &[i64; 3]) -> f64 {
    let t0 = rho_thirds(x);
    (0u32..8)
        .map(|mask| {
            let y = [
                x[0] + i64::from(mask & 1),
                x[1] + i64::from(mask >> 1 & 1),
                x[2] + i64::from(mask >> 2 & 1),
            ];
            f_increment(t0, rho_thirds(&y)).abs()
        })
        .fold(0.0, f64::max)
}

pub fn as_triple(x: &ExcessState) -> Result<[i64; 3]> {
    x.as_slice().try_into().map_err(|_| Error::InvalidParams(format!("drift needs d = 3, got d = {}", x.dim())))
}

/// Radius and angle of the class of `q` in the diagonal-orthogonal plane.
/// The angle is measured from the projected `(1, 0, 0)` axis, in radians.
pub fn polar_coords(q: &[i64; 3]) -> (f64, f64) {
    let (a, b, c) = (q[0] as f64, q[1] as f64, q[2] as f64);
    let x = (2.0 * a - b - c) / 6f64.sqrt();
    let y = (b - c) / 2f64.sqrt();
    ((rho_thirds(q) as f64 / 3.0).sqrt(), y.atan2(x))
}

/// Drift of `ln ln(e + r^2)` written in polar form: the six non-idle moves
/// of length `step` land at squared radius `r^2 + step^2 - 2 r step cos(phi + m 60deg)`.
pub fn polar_drift(r: f64, phi: f64, step: f64) -> f64 {
    let base = f_of_rho(r * r);
    let moves: f64 = (0..6)
        .map(|m| {
            let ang = phi + m as f64 * PI / 3.0;
            f_of_rho(r * r + step * step - 2.0 * r * step * ang.cos())
        })
        .sum();
    -0.75 * base + moves / 8.0
}

/// Value of [`polar_drift`] at its maximising angles `phi = 30deg + z 60deg`.
pub fn polar_drift_bound_with_step(r: f64, step: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::InvalidParams(format!("radius must be positive, got {r}")));
    }
    let r2 = r * r + step * step;
    let s3 = 3f64.sqrt() * r * step;
    Ok(-0.75 * f_of_rho(r * r) + 0.25 * (f_of_rho(r2) + f_of_rho(r2 - s3) + f_of_rho(r2 + s3)))
}

/// The polar drift bound on the unit-step triangular lattice.
pub fn polar_drift_bound(r: f64) -> Result<f64> {
    polar_drift_bound_with_step(r, 1.0)
}

/// Angle in `[0, 60)` degrees at which [`polar_drift`] is largest, found on a
/// grid of `steps` points over one 60-degree period.
pub fn polar_argmax_degrees(r: f64, step: f64, steps: usize) -> f64 {
    (0..steps)
        .map(|i| i as f64 * 60.0 / steps as f64)
        .map(|deg| (deg, polar_drift(r, deg.to_radians(), step)))
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

/// Smallest grid radius from which the bound stays negative up to `r_max`.
pub fn polar_bound_negative_from(step: f64, r_max: f64, dr: f64) -> Option<f64> {
    let mut r_star = None;
    let mut r = dr;
    while r <= r_max {
        let v = polar_drift_bound_with_step(r, step).unwrap_or(f64::NAN);
        if v < 0.0 {
            r_star.get_or_insert(r);
        } else {
            r_star = None;
        }
        r += dr;
    }
    r_star
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDrift {
    pub state: [i64; 3],
    pub rho: f64,
    pub delta_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KendallChecks {
    /// `f` is nondecreasing in `rho` over the scan and unbounded, so every
    /// sublevel set is a finite disc of classes.
    pub sublevel_finite: bool,
    /// Every drift is finite and bounded by the largest single-step change.
    pub drift_finite: bool,
    pub max_abs_drift: f64,
    /// Drift strictly negative for every scanned class with `rho > rho0`.
    pub negative_outside_exceptional: bool,
    /// `rho0` sits well inside the scanned disc (at most a quarter of `R^2`).
    pub exceptional_set_interior: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub radius: f64,
    pub states_scanned: usize,
    /// Largest `rho` among exceptional classes.
    pub rho0: f64,
    /// Canonical classes with nonnegative drift, in lexicographic order.
    pub exceptional_states: Vec<[i64; 3]>,
    pub max_drift_beyond_rho0: f64,
    /// `-max_drift_beyond_rho0`.
    pub margin: f64,
    pub kendall: KendallChecks,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_state: Option<Vec<StateDrift>>,
}

/// Approximate class count with `rho <= R^2`: the projected lattice has
/// `sqrt 3` points per unit area.
pub fn estimated_states(radius: f64) -> u64 {
    (3f64.sqrt() * PI * radius * radius * 1.05 + 64.0).ceil() as u64
}

/// Canonical classes with `rho <= bound`, lexicographically sorted.
pub fn classes_within(rho_bound: f64) -> Vec<[i64; 3]> {
    let t_max = (3.0 * rho_bound + 1e-9).floor() as i64;
    if t_max < 0 {
        return Vec::new();
    }
    // 3 rho = u^2 + w^2 + (u - w)^2 >= 1.5 u^2, likewise for w.
    let lim = ((2.0 * t_max as f64 / 3.0).sqrt()).floor() as i64 + 1;
    let mut out: Vec<[i64; 3]> = (-lim..=lim)
        .into_par_iter()
        .flat_map_iter(|u| {
            (-lim..=lim).filter_map(move |w| {
                let t = u * u + w * w + (u - w) * (u - w);
                (t <= t_max).then(|| {
                    let c = canonicalize(&[0, -u, -w]).into_vec();
                    [c[0], c[1], c[2]]
                })
            })
        })
        .collect();
    out.sort_unstable();
    out
}

/// Number of classes with `f <= k`.
pub fn sublevel_count(k: f64) -> usize {
    let rho_bound = k.exp().exp() - E;
    classes_within(rho_bound).into_iter().filter(|x| f(x) <= k).count()
}

pub fn drift_scan(radius: f64) -> Result<DriftReport> {
    drift_scan_with(radius, false, DEFAULT_MAX_STATES)
}

pub fn drift_scan_with(radius: f64, per_state: bool, max_states: u64) -> Result<DriftReport> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidParams(format!("scan radius must be positive, got {radius}")));
    }
    let required = estimated_states(radius);
    if required > max_states {
        return Err(Error::WorkLimit { what: "drift scan states", required, limit: max_states });
    }
    let states: Vec<StateDrift> = classes_within(radius * radius)
        .into_par_iter()
        .map(|x| StateDrift { state: x, rho: rho_thirds(&x) as f64 / 3.0, delta_f: delta_f(&x) })
        .collect();

    let exceptional: Vec<&StateDrift> = states.iter().filter(|s| s.delta_f >= 0.0).collect();
    let rho0_thirds = exceptional.iter().map(|s| rho_thirds(&s.state)).max().unwrap_or(0);
    let rho0 = rho0_thirds as f64 / 3.0;
    let beyond = states.iter().filter(|s| rho_thirds(&s.state) > rho0_thirds);
    let max_drift_beyond_rho0 = beyond.clone().map(|s| s.delta_f).fold(f64::NEG_INFINITY, f64::max);

    let mut by_rho: Vec<(i64, f64)> = states.iter().map(|s| (rho_thirds(&s.state), f(&s.state))).collect();
    by_rho.sort_by_key(|e| e.0);
    let sublevel_finite = by_rho.windows(2).all(|w| w[1].1 >= w[0].1);
    let drift_finite = states
        .iter()
        .all(|s| s.delta_f.is_finite() && s.delta_f.abs() <= max_step_change(&s.state) + 1e-15);
    let max_abs_drift = states.iter().map(|s| s.delta_f.abs()).fold(0.0, f64::max);

    let kendall = KendallChecks {
        sublevel_finite,
        drift_finite,
        max_abs_drift,
        negative_outside_exceptional: beyond.clone().all(|s| s.delta_f < 0.0),
        exceptional_set_interior: rho0 <= radius * radius / 4.0,
    };
    Ok(DriftReport {
        radius,
        states_scanned: states.len(),
        rho0,
        exceptional_states: exceptional.iter().map(|s| s.state).collect(),
        max_drift_beyond_rho0,
        margin: -max_drift_beyond_rho0,
        kendall,
        per_state: per_state.then_some(states),
    })
}

/// Scans at `R` and `2R` and reports whether the exceptional set changed.
pub fn stability_check(radius: f64, max_states: u64) -> Result<(DriftReport, DriftReport, bool)> {
    let small = drift_scan_with(radius, false, max_states)?;
    let large = drift_scan_with(2.0 * radius, false, max_states)?;
    let stable = small.exceptional_states == large.exceptional_states;
    Ok((small, large, stable))
}
