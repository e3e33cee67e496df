//! Empirical risk minimization over finite and linear classes, and the
//! two-step Star estimator: fit the ERM first, then re-fit over the star hull
//! of the class around that first fit.
//!
//! The star-hull search decomposes over segments. On each segment
//! `lambda g + (1 - lambda) f` the empirical risk is a quadratic in lambda,
//! minimized in closed form and clamped to [0,1], so step two is exact in
//! O(N n) with no iterative solver.
//!
//! Tie-breaking is fixed for reproducibility: the lowest index wins among
//! equal-risk candidates, and within a degenerate segment the larger lambda
//! is returned.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq_min_norm;
use crate::model::{DesignSample, EvaluatedFunction, FiniteDictionary, FunctionClass, LinearClass};

/// Empirical square-loss risk `(1/n) sum (f_i - y_i)^2`.
pub fn empirical_risk(f: &[f64], y: &[f64]) -> f64 {
    assert_eq!(f.len(), y.len(), "risk length mismatch");
    let ss: f64 = f.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    ss / y.len() as f64
}

/// Index of the empirical risk minimizer over a finite dictionary.
/// Ties break toward the lowest index.
pub fn erm_finite(dict: &FiniteDictionary, y: &[f64]) -> Result<usize> {
    if y.len() != dict.len_n() {
        return Err(Error::DimensionMismatch {
            what: "responses",
            expected: dict.len_n(),
            got: y.len(),
        });
    }
    let mut best = 0usize;
    let mut best_risk = empirical_risk(dict.row(0)?, y);
    for j in 1..dict.size() {
        let r = empirical_risk(dict.row(j)?, y);
        if r < best_risk {
            best = j;
            best_risk = r;
        }
    }
    Ok(best)
}

/// Least-squares fit over a linear class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    /// True when the Gram matrix was rank deficient and the minimum-norm
    /// solution was returned.
    pub gram_singular: bool,
}

/// Least-squares solution via a rank-revealing decomposition. Rank-deficient
/// designs yield the minimum-norm solution rather than an error.
pub fn erm_linear(class: &LinearClass, y: &[f64]) -> Result<LinearFit> {
    if y.len() != class.n() {
        return Err(Error::DimensionMismatch {
            what: "responses",
            expected: class.n(),
            got: y.len(),
        });
    }
    let b = DVector::from_column_slice(y);
    let (beta, singular) = lstsq_min_norm(class.features(), &b);
    Ok(LinearFit {
        weights: beta.iter().cloned().collect(),
        gram_singular: singular,
    })
}

/// Minimize `||lambda (g - f) + (f - y)||_n^2` over lambda in [0,1].
///
/// Closed form: `lambda* = clamp(-<g-f, f-y>_n / ||g-f||_n^2, 0, 1)`;
/// a degenerate segment (`||g-f||_n = 0`) returns lambda* = 1.
/// Returns `(lambda*, risk at lambda*)`.
pub fn segment_minimize(g: &[f64], f: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(g.len(), f.len(), "segment length mismatch");
    assert_eq!(g.len(), y.len(), "segment length mismatch");
    let mut dir_sq = 0.0; // ||g - f||^2 (unnormalized)
    let mut cross = 0.0; // <g - f, f - y>
    for i in 0..y.len() {
        let d = g[i] - f[i];
        dir_sq += d * d;
        cross += d * (f[i] - y[i]);
    }
    let lambda = if dir_sq == 0.0 {
        1.0
    } else {
        (-cross / dir_sq).clamp(0.0, 1.0)
    };
    let mut ss = 0.0;
    for i in 0..y.len() {
        let r = lambda * g[i] + (1.0 - lambda) * f[i] - y[i];
        ss += r * r;
    }
    (lambda, ss / y.len() as f64)
}

/// Step-one fit of the Star estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepOneFit {
    Finite {
        index: usize,
    },
    Linear {
        weights: Vec<f64>,
        gram_singular: bool,
    },
}

/// Result of the two-step Star fit.
#[derive(Debug, Clone, PartialEq)]
pub struct StarFitResult {
    pub g_hat: StepOneFit,
    pub f_hat: EvaluatedFunction,
    /// Position on the winning segment; 1 recovers the step-one fit.
    pub lambda_star: f64,
    /// Base member of the winning segment (finite classes only).
    pub base_index: Option<usize>,
    pub risk_g: f64,
    pub risk_f: f64,
}

/// The two-step Star estimator.
///
/// Step one is ERM over the class. Step two re-minimizes over the star hull
/// around the step-one fit: exact per-segment minimization for finite
/// dictionaries; for linear (convex) classes the hull adds nothing and the
/// step-one fit is returned with lambda* = 1.
pub fn star_estimator(class: &FunctionClass, sample: &DesignSample) -> Result<StarFitResult> {
    let y = sample.y();
    match class {
        FunctionClass::Finite(dict) => {
            let g_idx = erm_finite(dict, y)?;
            let g = dict.row(g_idx)?;
            let risk_g = empirical_risk(g, y);
            let mut best_j = g_idx;
            let mut best_lambda = 1.0;
            let mut best_risk = risk_g;
            for j in 0..dict.size() {
                let (lambda, risk) = segment_minimize(g, dict.row(j)?, y);
                if risk < best_risk {
                    best_j = j;
                    best_lambda = lambda;
                    best_risk = risk;
                }
            }
            let f = dict.row(best_j)?;
            let f_hat: Vec<f64> = g
                .iter()
                .zip(f)
                .map(|(gi, fi)| best_lambda * gi + (1.0 - best_lambda) * fi)
                .collect();
            Ok(StarFitResult {
                g_hat: StepOneFit::Finite { index: g_idx },
                f_hat: EvaluatedFunction::new(f_hat)?,
                lambda_star: best_lambda,
                base_index: Some(best_j),
                risk_g,
                risk_f: best_risk,
            })
        }
        FunctionClass::Linear(linear) => {
            if sample.n() != linear.n() {
                return Err(Error::DimensionMismatch {
                    what: "sample size vs linear class",
                    expected: linear.n(),
                    got: sample.n(),
                });
            }
            let fit = erm_linear(linear, y)?;
            let f_hat = linear.evaluate(&fit.weights)?;
            let risk = empirical_risk(f_hat.values(), y);
            Ok(StarFitResult {
                g_hat: StepOneFit::Linear {
                    weights: fit.weights,
                    gram_singular: fit.gram_singular,
                },
                f_hat,
                lambda_star: 1.0,
                base_index: None,
                risk_g: risk,
                risk_f: risk,
            })
        }
    }
}
