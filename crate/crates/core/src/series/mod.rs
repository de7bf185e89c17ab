//! Return-probability series of the excess walk.
//!
//! `P(n, k) = C(n, k) p^k (1-p)^(n-k)` is the chance that one queue receives
//! exactly `k` arrivals in `n` slots. The excess walk is back at its start
//! after `n` slots iff all `d` queues received the same count, so
//!
//! ```text
//! R_d(n) = sum_k P(n, k)^d
//! ```
//!
//! and the walk is transient iff `sum_n R_d(n)` converges. Two back-ends are
//! provided: exact rationals, and natural-log doubles built on `ln Γ` for rows
//! far beyond what exact arithmetic can reach.

mod bounds;
mod exact;
mod logdomain;
mod report;
mod slope;

pub use bounds::{
    clt_approx, d2_lower_bound, extreme_point_scan, lemma1_check, lemma1_check_f64, peak_info,
    stirling_bound, stirling_threshold, symmetry_and_convexity_check, D2LowerBound, Lemma1Report,
    PeakInfo, StirlingScan, SymmetryReport,
};
pub use exact::{binomial, rd_exact, rd_exact_big, row_normalization, term, ExactProb};
pub use logdomain::{ln_binomial, log_sum_exp, rd_log, LnFactorials, LogProb};
pub use report::{partial_sum, partial_sum_window, SeriesReport, SeriesValues};
pub use slope::{classify_slope, fit_log_log, Classification, SlopeFit};

use serde::{Deserialize, Serialize};

use crate::prob::Prob;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Log,
}

impl std::str::FromStr for Backend {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "log" => Ok(Backend::Log),
            other => Err(crate::Error::InvalidParams(format!("unknown backend `{other}` (exact|log)"))),
        }
    }
}

/// `R_d(n)` from either back-end.
#[derive(Clone, Debug, PartialEq)]
pub enum RdValue {
    Exact(ExactProb),
    Log(LogProb),
}

impl RdValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            RdValue::Exact(e) => e.to_f64(),
            RdValue::Log(l) => l.exp(),
        }
    }

    pub fn ln(&self) -> f64 {
        match self {
            RdValue::Exact(e) => e.ln(),
            RdValue::Log(l) => l.ln(),
        }
    }
}

pub fn rd(n: u64, d: u32, p: Prob, backend: Backend) -> RdValue {
    match backend {
        Backend::Exact => RdValue::Exact(rd_exact(n, d, p)),
        Backend::Log => RdValue::Log(rd_log(n, d, p)),
    }
}
