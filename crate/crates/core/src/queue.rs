//! A batch of `d` synchronized queues in discrete time.
//!
//! Each slot every queue independently receives one customer with probability
//! `p`. The server removes one customer from *every* queue at once, and only
//! if no queue is empty; even then the service succeeds only with
//! probability `m_bar`:
//!
//! ```text
//! q[t+1] = q[t] - 1 * m[t] * v[t] + a[t],     v[t] = 1  =>  min(q[t]) >= 1
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::quotient::ExcessState;
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub d: usize,
    pub p: Prob,
    pub m_bar: Prob,
}

impl SystemParams {
    /// Validated constructor: `d >= 2`, `0 < p < m_bar <= 1`.
    pub fn new(d: usize, p: Prob, m_bar: Prob) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParams(format!("a batch needs at least 2 queues, got d = {d}")));
        }
        p.require_open_unit("p")?;
        if m_bar == Prob::ZERO {
            return Err(Error::InvalidParams("m_bar must be positive".into()));
        }
        if p >= m_bar {
            return Err(Error::InvalidParams(format!(
                "arrival probability p = {p} must be below the service probability m_bar = {m_bar}"
            )));
        }
        Ok(SystemParams { d, p, m_bar })
    }

    /// Skips the `0 < p < m_bar` checks so that degenerate arrival streams
    /// (`p = 0`, `p = 1`) can be used in tests. Not for production runs.
    pub fn test_fixture(d: usize, p: Prob, m_bar: Prob) -> Self {
        assert!(d >= 1);
        SystemParams { d, p, m_bar }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueueState {
    pub q: Vec<u64>,
    /// Slot index. Bookkeeping only.
    pub t: u64,
}

impl QueueState {
    pub fn new(q: Vec<u64>) -> Self {
        QueueState { q, t: 0 }
    }

    pub fn empty(d: usize) -> Self {
        QueueState::new(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn min(&self) -> u64 {
        self.q.iter().copied().min().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrivalVector(pub Vec<bool>);

impl ArrivalVector {
    pub fn from_bits(bits: &[u8]) -> Self {
        ArrivalVector(bits.iter().map(|&b| b != 0).collect())
    }

    /// Decodes the low `d` bits of `mask`, component `i` from bit `i`.
    pub fn from_mask(mask: u32, d: usize) -> Self {
        ArrivalVector((0..d).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlDecision {
    /// Service requested.
    pub v: bool,
    /// Disturbance sample; service only happens if this is also set.
    pub m: bool,
}

/// Admissible service policies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Serve whenever every queue is nonempty.
    Greedy,
    /// Never serve.
    NeverServe,
    /// Serve only if every queue holds at least this many customers.
    Threshold(u64),
}

impl Policy {
    pub fn decide(&self, q: &QueueState) -> bool {
        match *self {
            Policy::Greedy => greedy_policy(q),
            Policy::NeverServe => false,
            Policy::Threshold(k) => q.min() >= k.max(1),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Policy::Greedy => "greedy".into(),
            Policy::NeverServe => "never-serve".into(),
            Policy::Threshold(k) => format!("threshold-{k}"),
        }
    }
}

pub fn greedy_policy(q: &QueueState) -> bool {
    !q.q.is_empty() && q.min() >= 1
}

/// One slot of the queue recursion.
pub fn step(q: &QueueState, v: bool, m: bool, a: &ArrivalVector) -> Result<QueueState> {
    if q.dim() != a.dim() {
        return Err(Error::LengthMismatch { left: q.dim(), right: a.dim() });
    }
    if v && q.min() == 0 {
        return Err(Error::ConstraintViolation { state: q.q.clone() });
    }
    let served = u64::from(v && m);
    let next = q
        .q
        .iter()
        .zip(&a.0)
        .map(|(&qi, &ai)| qi - served + u64::from(ai))
        .collect();
    Ok(QueueState { q: next, t: q.t + 1 })
}

pub fn sample_arrivals(params: &SystemParams, rng: &mut RandomStream) -> ArrivalVector {
    ArrivalVector((0..params.d).map(|_| rng.bernoulli(params.p)).collect())
}

/// Allocation-free variant of [`sample_arrivals`]; draws `buf.len()` components
/// in the same order.
pub fn sample_arrivals_into(p: Prob, rng: &mut RandomStream, buf: &mut [bool]) {
    for b in buf.iter_mut() {
        *b = rng.bernoulli(p);
    }
}

/// Splits `q` into the diagonal level `min(q)` and the excess `q - 1*min(q)`.
pub fn decompose(q: &QueueState) -> (u64, ExcessState) {
    let par = q.min();
    let perp = q.q.iter().map(|&qi| (qi - par) as i64).collect();
    (par, ExcessState::from_canonical_unchecked(perp))
}

pub fn recompose(q_par: u64, q_perp: &ExcessState) -> QueueState {
    QueueState::new(q_perp.as_slice().iter().map(|&x| q_par + x as u64).collect())
}
