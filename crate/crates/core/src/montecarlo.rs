//! Seeded simulation of the queue batch and of its excess walk.
//!
//! Every trial draws from its own [`RandomStream`], keyed by the master seed
//! and a stream index derived from the trial number, so results do not depend
//! on how trials are split across threads. All aggregation is over integer
//! counts and therefore bit-identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::queue::{decompose, sample_arrivals_into, step, ArrivalVector, Policy, QueueState, SystemParams};
use crate::quotient::ExcessState;
use crate::rng::RandomStream;

const CHUNK: u64 = 4096;

/// Stream index for the `trial`-th restart of horizon `n` in [`estimate_rd`].
/// Distinct `(n, trial)` pairs map to distinct indices for `trials < 2^40`.
pub fn return_stream_index(n: u64, trial: u64) -> u64 {
    (n << 40) | trial
}

/// Runs `n` excess steps from the origin and reports whether it ended there.
fn excess_returns(d: usize, p: Prob, n: u64, rng: &mut RandomStream, x: &mut ExcessState, buf: &mut [bool]) -> bool {
    *x = ExcessState::origin(d);
    for _ in 0..n {
        sample_arrivals_into(p, rng, buf);
        x.advance(buf);
    }
    x.is_origin()
}

/// Per-horizon return counts; merging is plain addition, so any partition of
/// the trials gives the same totals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnCounts {
    pub ns: Vec<u64>,
    pub trials: Vec<u64>,
    pub returns: Vec<u64>,
}

impl ReturnCounts {
    pub fn empty(ns: &[u64]) -> Self {
        ReturnCounts { ns: ns.to_vec(), trials: vec![0; ns.len()], returns: vec![0; ns.len()] }
    }

    pub fn merge(mut self, other: &ReturnCounts) -> Self {
        assert_eq!(self.ns, other.ns, "merging counts for different horizons");
        for i in 0..self.ns.len() {
            self.trials[i] += other.trials[i];
            self.returns[i] += other.returns[i];
        }
        self
    }
}

/// Counts returns for trials `trial_range` at each horizon in `ns`.
pub fn count_returns(ns: &[u64], d: usize, p: Prob, seed: u64, trial_range: std::ops::Range<u64>) -> ReturnCounts {
    let mut counts = ReturnCounts::empty(ns);
    let mut x = ExcessState::origin(d);
    let mut buf = vec![false; d];
    for (i, &n) in ns.iter().enumerate() {
        for trial in trial_range.clone() {
            let mut rng = RandomStream::new(seed, return_stream_index(n, trial));
            counts.trials[i] += 1;
            counts.returns[i] += u64::from(excess_returns(d, p, n, &mut rng, &mut x, &mut buf));
        }
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnEstimate {
    pub n: u64,
    pub trials: u64,
    pub returns: u64,
    pub estimate: f64,
    /// Binomial standard error `sqrt(est (1 - est) / trials)`.
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// A fresh trajectory from the origin for every `(n, trial)`.
    IndependentRestarts,
    /// Sliding windows along one trajectory. Estimates for different `n` are
    /// correlated with each other.
    SingleTrajectoryCorrelated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnEstimates {
    pub d: usize,
    pub p: Prob,
    pub seed: u64,
    pub mode: EstimatorMode,
    /// Width of the reported intervals in standard errors.
    pub ci_sigmas: f64,
    pub estimates: Vec<ReturnEstimate>,
}

fn estimate_from_counts(n: u64, trials: u64, returns: u64, sigmas: f64) -> ReturnEstimate {
    let est = if trials == 0 { f64::NAN } else { returns as f64 / trials as f64 };
    let se = (est * (1.0 - est) / trials as f64).sqrt();
    ReturnEstimate {
        n,
        trials,
        returns,
        estimate: est,
        std_error: se,
        ci_low: (est - sigmas * se).max(0.0),
        ci_high: (est + sigmas * se).min(1.0),
    }
}

pub const CI_SIGMAS: f64 = 4.0;

/// Estimates `R_d(n)` at each horizon in `ns` from `trials` independent
/// restarts per horizon.
pub fn estimate_rd_at(ns: &[u64], d: usize, p: Prob, trials: u64, seed: u64) -> Result<ReturnEstimates> {
    if trials == 0 {
        return Err(Error::InvalidParams("need at least one trial".into()));
    }
    if trials >= 1 << 40 {
        return Err(Error::InvalidParams("at most 2^40 trials per horizon".into()));
    }
    if d == 0 {
        return Err(Error::InvalidParams("d must be positive".into()));
    }
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<ReturnCounts> = (0..chunks)
        .into_par_iter()
        .map(|c| count_returns(ns, d, p, seed, c * CHUNK..((c + 1) * CHUNK).min(trials)))
        .collect();
    let total = partials.iter().fold(ReturnCounts::empty(ns), |acc, part| acc.merge(part));
    Ok(ReturnEstimates {
        d,
        p,
        seed,
        mode: EstimatorMode::IndependentRestarts,
        ci_sigmas: CI_SIGMAS,
        estimates: (0..ns.len())
            .map(|i| estimate_from_counts(ns[i], total.trials[i], total.returns[i], CI_SIGMAS))
            .collect(),
    })
}

pub fn estimate_rd(n_max: u64, d: usize, p: Prob, trials: u64, seed: u64) -> Result<ReturnEstimates> {
    let ns: Vec<u64> = (0..=n_max).collect();
    estimate_rd_at(&ns, d, p, trials, seed)
}

/// Cheap correlated estimate from one trajectory of length `horizon`: the
/// fraction of windows `[t, t + n]` whose endpoints share a class. The
/// binomial error bars understate the true uncertainty.
pub fn estimate_rd_single_trajectory(n_max: u64, d: usize, p: Prob, horizon: u64, seed: u64) -> Result<ReturnEstimates> {
    if horizon <= n_max {
        return Err(Error::InvalidParams(format!("horizon {horizon} must exceed n_max {n_max}")));
    }
    let mut rng = RandomStream::new(seed, 0);
    let mut buf = vec![false; d];
    let mut x = ExcessState::origin(d);
    let mut path = Vec::with_capacity(horizon as usize + 1);
    path.push(x.clone());
    for _ in 0..horizon {
        sample_arrivals_into(p, &mut rng, &mut buf);
        x.advance(&buf);
        path.push(x.clone());
    }
    let estimates = (0..=n_max)
        .map(|n| {
            let windows = horizon - n + 1;
            let hits = (0..windows as usize).filter(|&t| path[t] == path[t + n as usize]).count() as u64;
            estimate_from_counts(n, windows, hits, CI_SIGMAS)
        })
        .collect();
    Ok(ReturnEstimates { d, p, seed, mode: EstimatorMode::SingleTrajectoryCorrelated, ci_sigmas: CI_SIGMAS, estimates })
}

/// Summary of one simulated queue trajectory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub params: SystemParams,
    pub policy: String,
    pub seed: u64,
    pub horizon: u64,
    pub initial_state: Vec<u64>,
    pub final_state: Vec<u64>,
    /// Slots `t` in `1..=horizon` at which the excess sat on the diagonal.
    pub origin_visits: u64,
    /// Slots at which the excess was back in its starting class.
    pub return_times: Vec<u64>,
    /// Largest single-queue backlog seen.
    pub max_backlog: u64,
    /// Sum over slots `1..=horizon` of the diagonal level (the shortest queue).
    pub sum_parallel: u128,
    pub max_parallel: u64,
    /// Sum over slots of the largest excess component.
    pub sum_excess_max: u128,
    pub services: u64,
}

impl TrajectoryStats {
    pub fn mean_parallel(&self) -> f64 {
        self.sum_parallel as f64 / self.horizon as f64
    }

    pub fn mean_excess_max(&self) -> f64 {
        self.sum_excess_max as f64 / self.horizon as f64
    }

    pub fn origin_visit_rate(&self) -> f64 {
        self.origin_visits as f64 / self.horizon as f64
    }
}

/// Arrivals come from stream 0 and service disturbances from stream 1 of the
/// seed; a disturbance is drawn every slot whether or not the policy serves,
/// so two policies run on the same seed see identical arrivals.
fn run_queue<F: FnMut(&QueueState, &ExcessState, bool)>(
    params: &SystemParams,
    policy: Policy,
    horizon: u64,
    seed: u64,
    q0: QueueState,
    mut observe: F,
) -> Result<QueueState> {
    if q0.dim() != params.d {
        return Err(Error::LengthMismatch { left: q0.dim(), right: params.d });
    }
    let mut arrivals = RandomStream::new(seed, 0);
    let mut disturbance = RandomStream::new(seed, 1);
    let mut buf = vec![false; params.d];
    let mut q = q0;
    for _ in 0..horizon {
        sample_arrivals_into(params.p, &mut arrivals, &mut buf);
        let m = disturbance.bernoulli(params.m_bar);
        let v = policy.decide(&q);
        let a = ArrivalVector(buf.clone());
        q = step(&q, v, m, &a)?;
        let (_, perp) = decompose(&q);
        observe(&q, &perp, v && m);
    }
    Ok(q)
}

pub fn simulate_queue(
    params: &SystemParams,
    policy: Policy,
    horizon: u64,
    seed: u64,
    q0: Option<QueueState>,
) -> Result<TrajectoryStats> {
    if horizon == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    let q0 = q0.unwrap_or_else(|| QueueState::empty(params.d));
    let (_, start_class) = decompose(&q0);
    let mut stats = TrajectoryStats {
        params: *params,
        policy: policy.name(),
        seed,
        horizon,
        initial_state: q0.q.clone(),
        final_state: Vec::new(),
        origin_visits: 0,
        return_times: Vec::new(),
        max_backlog: q0.q.iter().copied().max().unwrap_or(0),
        sum_parallel: 0,
        max_parallel: 0,
        sum_excess_max: 0,
        services: 0,
    };
    let last = run_queue(params, policy, horizon, seed, q0, |q, perp, served| {
        let par = q.min();
        stats.max_backlog = stats.max_backlog.max(q.q.iter().copied().max().unwrap_or(0));
        stats.sum_parallel += par as u128;
        stats.max_parallel = stats.max_parallel.max(par);
        stats.sum_excess_max += perp.as_slice().iter().copied().max().unwrap_or(0) as u128;
        stats.services += u64::from(served);
        if perp.is_origin() {
            stats.origin_visits += 1;
        }
        if *perp == start_class {
            stats.return_times.push(q.t);
        }
    })?;
    stats.final_state = last.q;
    Ok(stats)
}

/// Full state path `q_1 ..= q_horizon` (the start state is not included).
pub fn simulate_queue_path(
    params: &SystemParams,
    policy: Policy,
    horizon: u64,
    seed: u64,
    q0: QueueState,
) -> Result<Vec<QueueState>> {
    let mut path = Vec::with_capacity(horizon as usize);
    run_queue(params, policy, horizon, seed, q0, |q, _, _| path.push(q.clone()))?;
    Ok(path)
}

/// Excess path `x_1 ..= x_horizon` of [`simulate_queue_path`].
pub fn excess_path(params: &SystemParams, policy: Policy, horizon: u64, seed: u64, q0: QueueState) -> Result<Vec<ExcessState>> {
    let mut path = Vec::with_capacity(horizon as usize);
    run_queue(params, policy, horizon, seed, q0, |_, perp, _| path.push(perp.clone()))?;
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    Pass,
    Fail,
    /// No threshold is asserted for this dimension.
    Informational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub d: usize,
    pub p: Prob,
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    /// Mean origin visits in slots `1..=T`.
    pub mean_visits_t: f64,
    /// Mean origin visits in slots `1..=2T`.
    pub mean_visits_2t: f64,
    /// `mean_visits_2t / mean_visits_t`.
    pub ratio: f64,
    /// Mean visits in `(T, 2T]`.
    pub mean_visits_between: f64,
    /// Mean cumulative visits at checkpoints `(t, visits)`.
    pub curve: Vec<(u64, f64)>,
    pub verdict: GrowthVerdict,
}

pub const GROWTH_RATIO_MIN: f64 = 1.3;
pub const SATURATION_MAX: f64 = 1.0;

fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut pts: Vec<u64> = std::iter::successors(Some(1u64), |&t| t.checked_mul(2)).take_while(|&t| t < 2 * horizon).collect();
    pts.extend([horizon, 2 * horizon]);
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Origin-class visit counts of one excess walk at every checkpoint.
fn visit_counts(d: usize, p: Prob, seed: u64, trial: u64, cps: &[u64]) -> Vec<u64> {
    let mut rng = RandomStream::new(seed, trial);
    let mut buf = vec![false; d];
    let mut x = ExcessState::origin(d);
    let mut visits = 0u64;
    let mut out = Vec::with_capacity(cps.len());
    let mut next = 0;
    let end = *cps.last().unwrap_or(&0);
    for t in 1..=end {
        sample_arrivals_into(p, &mut rng, &mut buf);
        x.advance(&buf);
        visits += u64::from(x.is_origin());
        if t == cps[next] {
            out.push(visits);
            next += 1;
        }
    }
    out
}

/// Mean number of returns to the origin class up to `T` and `2T`. Growth by
/// about `sqrt 2` signals a one-dimensional recurrent walk; a flat count
/// signals transience.
pub fn visit_growth(d: usize, p: Prob, horizon: u64, trials: u64, seed: u64) -> Result<GrowthReport> {
    if horizon < 2 {
        return Err(Error::InvalidParams("horizon must be at least 2".into()));
    }
    if trials == 0 || d < 2 {
        return Err(Error::InvalidParams("need d >= 2 and at least one trial".into()));
    }
    let cps = checkpoints(horizon);
    let per_trial: Vec<Vec<u64>> = (0..trials).into_par_iter().map(|t| visit_counts(d, p, seed, t, &cps)).collect();
    let totals: Vec<u64> = (0..cps.len()).map(|i| per_trial.iter().map(|v| v[i]).sum()).collect();
    let mean = |t: u64| totals[cps.iter().position(|&c| c == t).expect("checkpoint")] as f64 / trials as f64;
    let (v1, v2) = (mean(horizon), mean(2 * horizon));
    let ratio = v2 / v1;
    let between = v2 - v1;
    let verdict = match d {
        2 if ratio >= GROWTH_RATIO_MIN => GrowthVerdict::Pass,
        2 => GrowthVerdict::Fail,
        d if d >= 6 && between <= SATURATION_MAX => GrowthVerdict::Pass,
        d if d >= 6 => GrowthVerdict::Fail,
        _ => GrowthVerdict::Informational,
    };
    Ok(GrowthReport {
        d,
        p,
        horizon,
        trials,
        seed,
        mean_visits_t: v1,
        mean_visits_2t: v2,
        ratio,
        mean_visits_between: between,
        curve: cps.iter().zip(&totals).map(|(&t, &s)| (t, s as f64 / trials as f64)).collect(),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_always_return() {
        let est = estimate_rd_at(&[0], 3, Prob::HALF, 1000, 5).unwrap();
        assert_eq!(est.estimates[0].returns, 1000);
        assert_eq!(est.estimates[0].estimate, 1.0);
    }

    #[test]
    fn merge_is_partition_independent() {
        let ns = [1, 3, 4];
        let whole = count_returns(&ns, 2, Prob::HALF, 9, 0..300);
        let parts = [0..17, 17..150, 150..151, 151..300];
        let merged = parts
            .iter()
            .fold(ReturnCounts::empty(&ns), |acc, r| acc.merge(&count_returns(&ns, 2, Prob::HALF, 9, r.clone())));
        assert_eq!(whole, merged);
    }

    #[test]
    fn estimates_are_reproducible() {
        let a = estimate_rd(4, 3, Prob::new(1, 3).unwrap(), 5000, 42).unwrap();
        let b = estimate_rd(4, 3, Prob::new(1, 3).unwrap(), 5000, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_trajectory_mode_is_labelled() {
        let est = estimate_rd_single_trajectory(3, 2, Prob::HALF, 20_000, 1).unwrap();
        assert_eq!(est.mode, EstimatorMode::SingleTrajectoryCorrelated);
        assert_eq!(est.estimates[0].estimate, 1.0);
        assert!((est.estimates[1].estimate - 0.5).abs() < 0.03);
        assert!(estimate_rd_single_trajectory(3, 2, Prob::HALF, 3, 1).is_err());
    }

    #[test]
    fn no_arrivals_drains_and_stays_empty() {
        let params = SystemParams::test_fixture(2, Prob::ZERO, Prob::ONE);
        let path = simulate_queue_path(&params, Policy::Greedy, 5, 0, QueueState::new(vec![1, 1])).unwrap();
        assert!(path.iter().all(|q| q.q == vec![0, 0]));
        let stats = simulate_queue(&params, Policy::Greedy, 5, 0, Some(QueueState::new(vec![1, 1]))).unwrap();
        assert_eq!(stats.final_state, vec![0, 0]);
        assert_eq!(stats.services, 1);
    }

    #[test]
    fn checkpoints_cover_t_and_2t() {
        assert_eq!(checkpoints(5), vec![1, 2, 4, 5, 8, 10]);
    }

    #[test]
    fn growth_is_reproducible() {
        let a = visit_growth(2, Prob::HALF, 500, 1, 3).unwrap();
        let b = visit_growth(2, Prob::HALF, 500, 1, 3).unwrap();
        assert_eq!(a, b);
        assert!(visit_growth(2, Prob::HALF, 1, 1, 3).is_err());
    }
}
