use serde::{Deserialize, Serialize};

/// Least-squares line through `(ln n, ln R(n))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub n_lo: u64,
    pub n_hi: u64,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub rms_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    DivergingLike,
    ConvergingLike,
    Inconclusive,
}

/// Terms decaying like `n^s` sum to infinity iff `s >= -1`. Slopes inside
/// `[-1.05, -0.95]` are too close to call from a finite window.
pub fn classify_slope(slope: f64) -> Classification {
    if slope > -0.95 {
        Classification::DivergingLike
    } else if slope < -1.05 {
        Classification::ConvergingLike
    } else {
        Classification::Inconclusive
    }
}

/// Fits `ln r = intercept + slope * ln n` over the given `(n, ln r)` samples.
/// Samples with `n = 0` or a non-finite log are skipped. Needs two usable points.
pub fn fit_log_log(samples: &[(u64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(n, y)| *n > 0 && y.is_finite())
        .map(|&(n, y)| ((n as f64).ln(), y))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ns = samples.iter().filter(|(n, y)| *n > 0 && y.is_finite()).map(|s| s.0);
    Some(SlopeFit {
        n_lo: ns.clone().min().unwrap_or(0),
        n_hi: ns.max().unwrap_or(0),
        points: pts.len(),
        slope,
        intercept,
        rms_residual: (ss / m).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        let samples: Vec<(u64, f64)> = (10..100).map(|n| (n, 3.0f64.ln() - 1.5 * (n as f64).ln())).collect();
        let fit = fit_log_log(&samples).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-10);
        assert!(fit.rms_residual < 1e-12);
        assert_eq!((fit.n_lo, fit.n_hi, fit.points), (10, 99, 90));
    }

    #[test]
    fn too_few_points() {
        assert!(fit_log_log(&[(0, 0.0), (5, -1.0)]).is_none());
        assert!(fit_log_log(&[]).is_none());
    }

    #[test]
    fn classification_bands() {
        assert_eq!(classify_slope(-0.5), Classification::DivergingLike);
        assert_eq!(classify_slope(-1.0), Classification::Inconclusive);
        assert_eq!(classify_slope(-0.96), Classification::Inconclusive);
        assert_eq!(classify_slope(-1.5), Classification::ConvergingLike);
    }
}
