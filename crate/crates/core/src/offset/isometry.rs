//! Lower isometry check: how often does the empirical second moment of every
//! class member stay above (1 - eta) of its population value?

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::pencil_min_eigenvalue;
use crate::seeding::stream_rng;
use crate::stats;

/// Report over repeated samples of size n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    /// Mean over trials of `1 - inf_f (E-hat f^2 / E f^2)`; members with
    /// `E f^2 = 0` are excluded.
    pub eta_hat: f64,
    pub n: usize,
    pub trials: usize,
    /// The eta the fraction refers to.
    pub eta: f64,
    /// Fraction of trials with `inf_f (E-hat f^2 / E f^2) >= 1 - eta`.
    pub fraction_satisfying: f64,
}

/// Classes with exactly computable population second moments.
pub enum IsometryClass {
    /// Finite class given by values on a finite-support design.
    FiniteOnSupport {
        /// Member values on the support points (N x m).
        support_values: Vec<Vec<f64>>,
        /// Support weights, summing to one.
        weights: Vec<f64>,
    },
    /// Linear class under a Gaussian design with known second-moment matrix.
    LinearGaussian { covariance: DMatrix<f64> },
}

/// Exact infimum of the empirical-to-population second moment ratio for a
/// linear class: the smallest eigenvalue of the pencil (Sigma-hat, Sigma).
pub fn linear_isometry_inf(covariance: &DMatrix<f64>, sample_rows: &[Vec<f64>]) -> f64 {
    let n = sample_rows.len();
    let p = covariance.nrows();
    let mut sigma_hat = DMatrix::zeros(p, p);
    for row in sample_rows {
        for r in 0..p {
            for s in 0..p {
                sigma_hat[(r, s)] += row[r] * row[s] / n as f64;
            }
        }
    }
    pencil_min_eigenvalue(&sigma_hat, covariance)
}

fn finite_trial_inf(
    support_values: &[Vec<f64>],
    weights: &[f64],
    indices: &[usize],
) -> Option<f64> {
    let n = indices.len() as f64;
    let mut inf: Option<f64> = None;
    for member in support_values {
        let pop: f64 = member.iter().zip(weights).map(|(v, w)| w * v * v).sum();
        if pop <= 0.0 {
            continue;
        }
        let emp: f64 = indices.iter().map(|&k| member[k] * member[k]).sum::<f64>() / n;
        let ratio = emp / pop;
        inf = Some(inf.map_or(ratio, |cur: f64| cur.min(ratio)));
    }
    inf
}

/// Estimate the lower-isometry behaviour over repeated samples.
pub fn isometry_check(
    class: &IsometryClass,
    eta: f64,
    trials: usize,
    n: usize,
    seed: u64,
) -> Result<IsometryReport> {
    if trials == 0 || n == 0 {
        return Err(Error::InvalidParameter(
            "trials and n must be at least 1".into(),
        ));
    }
    if !(0.0 < eta && eta < 1.0) {
        return Err(Error::InvalidParameter("eta must be in (0,1)".into()));
    }

    let infs: Vec<f64> = match class {
        IsometryClass::FiniteOnSupport {
            support_values,
            weights,
        } => {
            if support_values.is_empty() {
                return Err(Error::Empty("isometry class"));
            }
            let any_positive = support_values
                .iter()
                .any(|m| m.iter().zip(weights).map(|(v, w)| w * v * v).sum::<f64>() > 0.0);
            if !any_positive {
                return Err(Error::Empty("isometry class (only the zero function)"));
            }
            let cum: Vec<f64> = weights
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w;
                    Some(*acc)
                })
                .collect();
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream_rng(seed, t as u64);
                    let indices: Vec<usize> = (0..n)
                        .map(|_| {
                            let u: f64 = rng.gen();
                            cum.partition_point(|&c| c < u).min(weights.len() - 1)
                        })
                        .collect();
                    finite_trial_inf(support_values, weights, &indices)
                        .expect("checked: class has a member with positive norm")
                })
                .collect()
        }
        IsometryClass::LinearGaussian { covariance } => {
            let p = covariance.nrows();
            let chol = covariance.clone().cholesky().ok_or_else(|| {
                Error::InvalidParameter("covariance must be positive definite".into())
            })?;
            let l = chol.l();
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream_rng(seed, t as u64);
                    let rows: Vec<Vec<f64>> = (0..n)
                        .map(|_| {
                            let g: Vec<f64> =
                                (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
                            (0..p)
                                .map(|r| (0..=r).map(|c| l[(r, c)] * g[c]).sum())
                                .collect()
                        })
                        .collect();
                    linear_isometry_inf(covariance, &rows)
                })
                .collect()
        }
    };

    let satisfied = infs.iter().filter(|&&v| v >= 1.0 - eta).count();
    let etas: Vec<f64> = infs.iter().map(|v| 1.0 - v).collect();
    Ok(IsometryReport {
        eta_hat: stats::mean(&etas),
        n,
        trials,
        eta,
        fraction_satisfying: satisfied as f64 / trials as f64,
    })
}
