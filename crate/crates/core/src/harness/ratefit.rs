//! Log-log slope fitting for rate verification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through (log n, log metric) points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// The fitted (log n, log metric) pairs.
    pub points: Vec<(f64, f64)>,
}

impl RateFit {
    /// Fit on at least four points.
    pub fn fit(points: &[(f64, f64)]) -> Result<RateFit> {
        if points.len() < 4 {
            return Err(Error::InvalidParameter(format!(
                "rate fit needs at least 4 points, got {}",
                points.len()
            )));
        }
        let n = points.len() as f64;
        let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
        let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let mut syy = 0.0;
        for (x, y) in points {
            sxx += (x - mean_x) * (x - mean_x);
            sxy += (x - mean_x) * (y - mean_y);
            syy += (y - mean_y) * (y - mean_y);
        }
        if sxx == 0.0 {
            return Err(Error::InvalidParameter(
                "rate fit needs at least two distinct abscissae".into(),
            ));
        }
        let slope = sxy / sxx;
        let intercept = mean_y - slope * mean_x;
        let r2 = if syy == 0.0 {
            1.0
        } else {
            sxy * sxy / (sxx * syy)
        };
        Ok(RateFit {
            slope,
            intercept,
            r2,
            points: points.to_vec(),
        })
    }

    /// Fit `log(metric)` against `log(n)`; every metric must be positive.
    pub fn fit_log_log(ns: &[usize], metrics: &[f64]) -> Result<RateFit> {
        if ns.len() != metrics.len() {
            return Err(Error::DimensionMismatch {
                what: "rate fit inputs",
                expected: ns.len(),
                got: metrics.len(),
            });
        }
        if metrics.iter().any(|&m| m <= 0.0) {
            return Err(Error::InvalidParameter(
                "rate fit metrics must be positive for the log-log fit".into(),
            ));
        }
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .zip(metrics)
            .map(|(&n, &m)| ((n as f64).ln(), m.ln()))
            .collect();
        Self::fit(&pts)
    }

    /// Reject fits too noisy for a slope assertion.
    pub fn require_r2(&self, required: f64) -> Result<&Self> {
        if self.r2 < required {
            return Err(Error::RateFitPoor {
                r2: self.r2,
                required,
            });
        }
        Ok(self)
    }
}
