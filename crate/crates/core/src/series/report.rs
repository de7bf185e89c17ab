use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::exact::{rd_exact, ExactProb};
use super::logdomain::{LnFactorials, LnRowParams};
use super::slope::{classify_slope, fit_log_log, Classification, SlopeFit};
use super::Backend;
use crate::prob::Prob;

#[derive(Clone, Debug)]
pub enum SeriesValues {
    Exact { r: Vec<ExactProb>, partial: Vec<BigRational> },
    Log { ln_r: Vec<f64>, partial: Vec<f64> },
}

/// `R_d(n)` for `n = 0..=n_max`, running sums and a tail slope estimate.
#[derive(Clone, Debug)]
pub struct SeriesReport {
    pub d: u32,
    pub p: Prob,
    pub n_max: u64,
    pub backend: Backend,
    pub values: SeriesValues,
    pub slope: Option<SlopeFit>,
    pub classification: Classification,
}

impl SeriesReport {
    pub fn len(&self) -> usize {
        self.n_max as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ln_r(&self, n: u64) -> f64 {
        match &self.values {
            SeriesValues::Exact { r, .. } => r[n as usize].ln(),
            SeriesValues::Log { ln_r, .. } => ln_r[n as usize],
        }
    }

    pub fn r_f64(&self, n: u64) -> f64 {
        match &self.values {
            SeriesValues::Exact { r, .. } => r[n as usize].to_f64(),
            SeriesValues::Log { ln_r, .. } => ln_r[n as usize].exp(),
        }
    }

    pub fn partial_f64(&self, n: u64) -> f64 {
        match &self.values {
            SeriesValues::Exact { partial, .. } => partial[n as usize].to_f64().unwrap_or(f64::NAN),
            SeriesValues::Log { partial, .. } => partial[n as usize],
        }
    }

    pub fn r_exact(&self, n: u64) -> Option<&ExactProb> {
        match &self.values {
            SeriesValues::Exact { r, .. } => r.get(n as usize),
            SeriesValues::Log { .. } => None,
        }
    }

    pub fn partial_exact(&self, n: u64) -> Option<&BigRational> {
        match &self.values {
            SeriesValues::Exact { partial, .. } => partial.get(n as usize),
            SeriesValues::Log { .. } => None,
        }
    }
}

/// Series report with the slope fitted over the upper half `[n_max/2, n_max]`.
pub fn partial_sum(n_max: u64, d: u32, p: Prob, backend: Backend) -> SeriesReport {
    partial_sum_window(n_max, d, p, backend, ((n_max / 2).max(1), n_max))
}

pub fn partial_sum_window(n_max: u64, d: u32, p: Prob, backend: Backend, window: (u64, u64)) -> SeriesReport {
    let values = match backend {
        Backend::Exact => {
            let r: Vec<ExactProb> = (0..=n_max).into_par_iter().map(|n| rd_exact(n, d, p)).collect();
            let mut acc = BigRational::zero();
            let partial = r
                .iter()
                .map(|v| {
                    acc += v.value();
                    acc.clone()
                })
                .collect();
            SeriesValues::Exact { r, partial }
        }
        Backend::Log => {
            let fact = LnFactorials::up_to(n_max);
            let row = LnRowParams::new(p);
            let ln_r: Vec<f64> = (0..=n_max).into_par_iter().map(|n| row.ln_rd(&fact, n, d)).collect();
            let mut acc = 0.0;
            let partial = ln_r
                .iter()
                .map(|l| {
                    acc += l.exp();
                    acc
                })
                .collect();
            SeriesValues::Log { ln_r, partial }
        }
    };
    let mut report = SeriesReport {
        d,
        p,
        n_max,
        backend,
        values,
        slope: None,
        classification: Classification::Inconclusive,
    };
    let (lo, hi) = (window.0.max(1), window.1.min(n_max));
    if lo <= hi {
        let samples: Vec<(u64, f64)> = (lo..=hi).map(|n| (n, report.ln_r(n))).collect();
        report.slope = fit_log_log(&samples);
    }
    if let Some(fit) = &report.slope {
        report.classification = classify_slope(fit.slope);
    }
    report
}
