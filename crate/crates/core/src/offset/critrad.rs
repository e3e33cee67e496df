//! Critical radius of the localized offset process.
//!
//! The critical radius at level (kappa, delta) is the smallest r such that,
//! with probability at least 1 - delta over the signs, the supremum of the
//! offset process restricted to the population ball { h : E h^2 <= r^2 }
//! stays below kappa r^2. Population norms are exact here: classes come
//! either from a finite-support design or from a linear class with known
//! second-moment matrix. An empirical norm is never substituted for E h^2.
//!
//! The probability is estimated by Monte Carlo with fresh signs at every
//! bisection step (per-step seeds derived from the master seed); bisection
//! stops at 1e-3 relative width on r.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::stream_rng;

/// Relative bisection tolerance on r.
const BISECT_REL_TOL: f64 = 1e-3;

/// Shifted star family over a finite-support design, carrying everything
/// needed for both the sample objective and exact population norms.
pub struct StarCritradInstance {
    /// Dictionary values on the support points (N x m).
    pub dict_support: Vec<Vec<f64>>,
    /// f* values on the support (length m).
    pub fstar_support: Vec<f64>,
    /// Support weights, summing to one.
    pub weights: Vec<f64>,
    /// Support index of each sample point (length n).
    pub sample_indices: Vec<usize>,
    /// Noise draws on the sample (length n).
    pub xi: Vec<f64>,
}

/// Precomputed quadratic data for the star family.
struct StarCritradSolver {
    /// Sample values of dictionary rows and f* (index N).
    sample_vectors: Vec<Vec<f64>>,
    /// Plain sample Gram (dot products).
    sample_gram: Vec<Vec<f64>>,
    /// Weighted population Gram over the support.
    pop_gram: Vec<Vec<f64>>,
    num_base: usize,
    n: usize,
}

impl StarCritradSolver {
    fn new(inst: &StarCritradInstance) -> Self {
        let num_base = inst.dict_support.len();
        let n = inst.sample_indices.len();
        let mut support_vectors: Vec<&[f64]> =
            inst.dict_support.iter().map(|r| r.as_slice()).collect();
        support_vectors.push(&inst.fstar_support);
        let m = support_vectors.len();

        let sample_vectors: Vec<Vec<f64>> = support_vectors
            .iter()
            .map(|v| inst.sample_indices.iter().map(|&k| v[k]).collect())
            .collect();

        let mut sample_gram = vec![vec![0.0; m]; m];
        let mut pop_gram = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                let dot: f64 = sample_vectors[i]
                    .iter()
                    .zip(&sample_vectors[j])
                    .map(|(a, b)| a * b)
                    .sum();
                sample_gram[i][j] = dot;
                sample_gram[j][i] = dot;
                let wdot: f64 = (0..support_vectors[i].len())
                    .map(|k| inst.weights[k] * support_vectors[i][k] * support_vectors[j][k])
                    .sum();
                pop_gram[i][j] = wdot;
                pop_gram[j][i] = wdot;
            }
        }
        StarCritradSolver {
            sample_vectors,
            sample_gram,
            pop_gram,
            num_base,
            n,
        }
    }

    /// Supremum of `(2/n) sum eps_i xi_i h_i - C (1/n) sum h_i^2` over the
    /// family, optionally restricted to population norm `E h^2 <= r2`.
    fn sup(&self, eps: &[f64], xi: &[f64], c_offset: f64, r2: Option<f64>) -> f64 {
        let star = self.num_base;
        let nf = self.n as f64;
        let s: Vec<f64> = self
            .sample_vectors
            .iter()
            .map(|v| (0..self.n).map(|i| eps[i] * xi[i] * v[i]).sum())
            .collect();
        let g = &self.sample_gram;
        let p = &self.pop_gram;
        let mut best = f64::NEG_INFINITY;
        for j in 0..self.num_base {
            let s_a = s[j] - s[star];
            let q_aa = g[j][j] - 2.0 * g[j][star] + g[star][star];
            let p_aa = p[j][j] - 2.0 * p[j][star] + p[star][star];
            for k in 0..self.num_base {
                for l in 0..self.num_base {
                    let s_b = s[k] - s[l];
                    let q_bb = g[k][k] - 2.0 * g[k][l] + g[l][l];
                    let q_ab = g[j][k] - g[j][l] - g[star][k] + g[star][l];
                    let p_bb = p[k][k] - 2.0 * p[k][l] + p[l][l];
                    let p_ab = p[j][k] - p[j][l] - p[star][k] + p[star][l];

                    // Feasible lambda range within [0,1].
                    let (mut lo, mut hi) = (0.0f64, 1.0f64);
                    if let Some(r2) = r2 {
                        if p_bb > 0.0 {
                            // p_bb l^2 + 2 p_ab l + (p_aa - r2) <= 0
                            let disc = p_ab * p_ab - p_bb * (p_aa - r2);
                            if disc < 0.0 {
                                continue;
                            }
                            let root = disc.sqrt();
                            lo = lo.max((-p_ab - root) / p_bb);
                            hi = hi.min((-p_ab + root) / p_bb);
                            if lo > hi {
                                continue;
                            }
                        } else if p_aa > r2 {
                            // b vanishes in population; feasibility is fixed.
                            continue;
                        }
                    }

                    let value = if q_bb > 0.0 {
                        let lambda = ((2.0 * s_b - 2.0 * c_offset * q_ab)
                            / (2.0 * c_offset * q_bb))
                            .clamp(lo, hi);
                        (2.0 * (s_a + lambda * s_b)
                            - c_offset * (q_aa + 2.0 * lambda * q_ab + lambda * lambda * q_bb))
                            / nf
                    } else {
                        // Flat segment on the sample; any feasible lambda works.
                        (2.0 * s_a - c_offset * q_aa) / nf
                    };
                    if value > best {
                        best = value;
                    }
                }
            }
        }
        best
    }

    /// Largest population norm in the family (all lambda in [0,1]).
    fn max_pop_norm_sq(&self) -> f64 {
        let star = self.num_base;
        let p = &self.pop_gram;
        let mut worst = 0.0f64;
        for j in 0..self.num_base {
            let p_aa = p[j][j] - 2.0 * p[j][star] + p[star][star];
            for k in 0..self.num_base {
                for l in 0..self.num_base {
                    let p_bb = p[k][k] - 2.0 * p[k][l] + p[l][l];
                    let p_ab = p[j][k] - p[j][l] - p[star][k] + p[star][l];
                    // Convex in lambda; the max over [0,1] is at an endpoint.
                    worst = worst.max(p_aa).max(p_aa + 2.0 * p_ab + p_bb);
                }
            }
        }
        worst
    }
}

/// Linear class with known population second-moment matrix.
pub struct LinearCritradInstance {
    /// n x p design matrix on the sample.
    pub features: DMatrix<f64>,
    /// Population second-moment matrix (p x p, positive definite).
    pub covariance: DMatrix<f64>,
    /// Noise draws on the sample.
    pub xi: Vec<f64>,
}

struct LinearCritradSolver {
    features: DMatrix<f64>,
    gram: DMatrix<f64>,
    covariance: DMatrix<f64>,
    n: usize,
}

impl LinearCritradSolver {
    fn new(inst: &LinearCritradInstance) -> Self {
        let gram = inst.features.transpose() * &inst.features;
        LinearCritradSolver {
            n: inst.features.nrows(),
            features: inst.features.clone(),
            gram,
            covariance: inst.covariance.clone(),
        }
    }

    fn objective(&self, beta: &DVector<f64>, a: &DVector<f64>, c_offset: f64) -> f64 {
        let quad = (&self.gram * beta).dot(beta);
        (2.0 * a.dot(beta) - c_offset * quad) / self.n as f64
    }

    /// Supremum of `(2/n) a^T beta - (C/n) beta^T G beta` over
    /// `{ beta : beta^T Sigma beta <= r2 }` (unrestricted when r2 is None).
    fn sup(&self, eps: &[f64], xi: &[f64], c_offset: f64, r2: Option<f64>) -> f64 {
        let n = self.n;
        let signed = DVector::from_fn(n, |i, _| eps[i] * xi[i]);
        let a = self.features.transpose() * signed;

        // Unconstrained maximizer via regularized solve at mu = 0.
        let solve = |mu: f64| -> DVector<f64> {
            let lhs = &self.gram * (2.0 * c_offset) + &self.covariance * (2.0 * mu * n as f64);
            crate::linalg::lstsq_min_norm(&lhs, &(a.clone() * 2.0)).0
        };
        let pop_norm_sq = |beta: &DVector<f64>| (&self.covariance * beta).dot(beta);

        let beta0 = solve(0.0);
        match r2 {
            None => self.objective(&beta0, &a, c_offset),
            Some(r2) => {
                if pop_norm_sq(&beta0) <= r2 {
                    return self.objective(&beta0, &a, c_offset);
                }
                // Bracket the multiplier, then bisect the KKT condition
                // pop_norm(beta(mu)) = r2 (monotone decreasing in mu).
                let mut mu_hi = 1.0;
                while pop_norm_sq(&solve(mu_hi)) > r2 && mu_hi < 1e12 {
                    mu_hi *= 4.0;
                }
                let mut lo = 0.0;
                let mut hi = mu_hi;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if pop_norm_sq(&solve(mid)) > r2 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                self.objective(&solve(hi), &a, c_offset)
            }
        }
    }
}

/// A class the critical-radius search accepts.
pub enum CritradClass {
    Star(StarCritradInstance),
    Linear(LinearCritradInstance),
}

enum Solver {
    Star(StarCritradSolver, Vec<f64>),
    Linear(LinearCritradSolver, Vec<f64>),
}

impl Solver {
    fn new(class: &CritradClass) -> Solver {
        match class {
            CritradClass::Star(inst) => Solver::Star(StarCritradSolver::new(inst), inst.xi.clone()),
            CritradClass::Linear(inst) => {
                Solver::Linear(LinearCritradSolver::new(inst), inst.xi.clone())
            }
        }
    }

    fn n(&self) -> usize {
        match self {
            Solver::Star(s, _) => s.n,
            Solver::Linear(s, _) => s.n,
        }
    }

    fn sup(&self, eps: &[f64], c_offset: f64, r2: Option<f64>) -> f64 {
        match self {
            Solver::Star(s, xi) => s.sup(eps, xi, c_offset, r2),
            Solver::Linear(s, xi) => s.sup(eps, xi, c_offset, r2),
        }
    }
}

/// Search result with the bisection trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRadiusResult {
    pub r: f64,
    pub kappa: f64,
    pub delta: f64,
    /// Fresh Monte Carlo estimate of P(sup over the r-ball <= kappa r^2) at
    /// the returned r.
    pub prob_estimate_at_r: f64,
    /// Frequency with which the unrestricted supremum equals the r-ball
    /// restricted supremum, on fresh draws at the returned r.
    pub restriction_identity_freq: f64,
    /// (r, probability) pairs visited by the bisection.
    pub bisection_trace: Vec<(f64, f64)>,
    pub reps: usize,
    pub seed: u64,
}

fn estimate_prob(
    solver: &Solver,
    c_offset: f64,
    kappa: f64,
    r: f64,
    reps: usize,
    seed: u64,
    step: u64,
) -> f64 {
    let n = solver.n();
    let hits: usize = (0..reps)
        .into_par_iter()
        .filter(|&rep| {
            let mut rng = stream_rng(seed, (step << 32) ^ rep as u64);
            let eps: Vec<f64> = (0..n)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            solver.sup(&eps, c_offset, Some(r * r)) <= kappa * r * r
        })
        .count();
    hits as f64 / reps as f64
}

/// Estimate the critical radius by bisection over `r_bracket`.
///
/// Returns the lower bracket end immediately when it already satisfies the
/// probability level; errors when even the upper end does not.
pub fn critical_radius(
    class: &CritradClass,
    kappa: f64,
    delta: f64,
    c_offset: f64,
    reps: usize,
    r_bracket: (f64, f64),
    seed: u64,
) -> Result<CriticalRadiusResult> {
    if kappa <= 0.0 || c_offset <= 0.0 {
        return Err(Error::InvalidParameter(
            "kappa and C must be positive".into(),
        ));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidParameter("delta must be in (0,1)".into()));
    }
    let (r_lo, r_hi) = r_bracket;
    if !(r_lo > 0.0 && r_hi > r_lo) {
        return Err(Error::InvalidParameter(
            "bracket must satisfy 0 < lo < hi".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }

    let solver = Solver::new(class);
    let level = 1.0 - delta;
    let mut trace = Vec::new();
    let mut step = 0u64;

    let p_lo = estimate_prob(&solver, c_offset, kappa, r_lo, reps, seed, step);
    trace.push((r_lo, p_lo));
    step += 1;

    let r_final = if p_lo >= level {
        r_lo
    } else {
        let p_hi = estimate_prob(&solver, c_offset, kappa, r_hi, reps, seed, step);
        trace.push((r_hi, p_hi));
        step += 1;
        if p_hi < level {
            return Err(Error::BracketNoCrossing {
                lo: r_lo,
                hi: r_hi,
                level,
            });
        }
        let mut lo = r_lo;
        let mut hi = r_hi;
        while (hi - lo) / hi > BISECT_REL_TOL {
            let mid = 0.5 * (lo + hi);
            let p_mid = estimate_prob(&solver, c_offset, kappa, mid, reps, seed, step);
            trace.push((mid, p_mid));
            step += 1;
            if p_mid >= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let prob_estimate_at_r = estimate_prob(&solver, c_offset, kappa, r_final, reps, seed, step);
    step += 1;

    // Restriction identity frequency at the returned radius.
    let n = solver.n();
    let ident_step = step;
    let hits: usize = (0..reps)
        .into_par_iter()
        .filter(|&rep| {
            let mut rng = stream_rng(seed, (ident_step << 32) ^ rep as u64);
            let eps: Vec<f64> = (0..n)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let full = solver.sup(&eps, c_offset, None);
            let restricted = solver.sup(&eps, c_offset, Some(r_final * r_final));
            (full - restricted).abs() <= 1e-12 * (1.0 + full.abs())
        })
        .count();

    Ok(CriticalRadiusResult {
        r: r_final,
        kappa,
        delta,
        prob_estimate_at_r,
        restriction_identity_freq: hits as f64 / reps as f64,
        bisection_trace: trace,
        reps,
        seed,
    })
}

/// Largest population norm over a star instance; convenient for choosing
/// sane brackets in experiments.
pub fn star_max_pop_norm(inst: &StarCritradInstance) -> f64 {
    StarCritradSolver::new(inst).max_pop_norm_sq().sqrt()
}

/// Probability and restriction-identity frequency at a fixed radius, on
/// fresh draws: `(P(sup over r-ball <= kappa r^2), P(sup full = sup ball))`.
pub fn critrad_evaluate_at(
    class: &CritradClass,
    r: f64,
    kappa: f64,
    c_offset: f64,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if r <= 0.0 || kappa <= 0.0 || c_offset <= 0.0 || reps == 0 {
        return Err(Error::InvalidParameter(
            "r, kappa, C must be positive and reps >= 1".into(),
        ));
    }
    let solver = Solver::new(class);
    let n = solver.n();
    let results: Vec<(bool, bool)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, rep as u64);
            let eps: Vec<f64> = (0..n)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let restricted = solver.sup(&eps, c_offset, Some(r * r));
            let full = solver.sup(&eps, c_offset, None);
            (
                restricted <= kappa * r * r,
                (full - restricted).abs() <= 1e-12 * (1.0 + full.abs()),
            )
        })
        .collect();
    let prob = results.iter().filter(|t| t.0).count() as f64 / reps as f64;
    let ident = results.iter().filter(|t| t.1).count() as f64 / reps as f64;
    Ok((prob, ident))
}
