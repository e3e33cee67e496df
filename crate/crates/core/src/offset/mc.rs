//! Monte Carlo estimation of offset complexities.
//!
//! Replications draw i.i.d. Rademacher signs from per-replication seeded
//! streams and are reduced in a fixed order (pairwise sums), so estimates are
//! bit-identical for a given (seed, reps) regardless of thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FiniteDictionary, LinearClass, ShiftedStarClass};
use crate::offset::{
    offset_sup_finite, Convention, LinearCoefficient, LinearSupSolver, Multipliers, StarSupSolver,
};
use crate::seeding::stream_rng;
use crate::stats;

/// Quantile levels reported by every Monte Carlo estimate.
pub const QUANTILE_LEVELS: [f64; 4] = [0.5, 0.9, 0.95, 0.99];

/// Monte Carlo estimate of an offset complexity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by sqrt(reps).
    pub stderr: f64,
    /// (level, value) pairs at the standard levels, monotone in level.
    pub quantiles: Vec<(f64, f64)>,
    pub reps: usize,
    pub seed: u64,
    pub c_offset: f64,
    pub convention: Convention,
}

/// Classes the Monte Carlo estimator handles.
pub enum McClass<'a> {
    Finite(&'a FiniteDictionary),
    Star(&'a ShiftedStarClass),
    Linear(&'a LinearClass),
}

impl McClass<'_> {
    fn len_n(&self) -> usize {
        match self {
            McClass::Finite(d) => d.len_n(),
            McClass::Star(s) => s.len_n(),
            McClass::Linear(l) => l.n(),
        }
    }
}

fn draw_signs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Per-replication supremum values for the requested class.
pub fn offset_mc_values(
    class: &McClass<'_>,
    c_offset: f64,
    convention: Convention,
    xi: Option<&[f64]>,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    if c_offset <= 0.0 {
        return Err(Error::InvalidParameter(
            "offset multiplier C must be positive".into(),
        ));
    }
    let n = class.len_n();
    let xi = match convention.multipliers {
        Multipliers::Unit => None,
        Multipliers::Noise => {
            let xi = xi.ok_or(Error::MissingTruth)?;
            if xi.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "noise multipliers",
                    expected: n,
                    got: xi.len(),
                });
            }
            Some(xi)
        }
    };

    let values: Vec<f64> = match class {
        McClass::Finite(dict) => (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream_rng(seed, rep as u64);
                let eps = draw_signs(&mut rng, n);
                offset_sup_finite(dict, &eps, c_offset, convention, xi).expect("validated inputs")
            })
            .collect(),
        McClass::Star(star) => {
            let solver = StarSupSolver::new(star);
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = stream_rng(seed, rep as u64);
                    let eps = draw_signs(&mut rng, n);
                    solver.sup(&eps, c_offset, convention.coefficient, xi)
                })
                .collect()
        }
        McClass::Linear(linear) => {
            let solver = LinearSupSolver::new(linear);
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = stream_rng(seed, rep as u64);
                    let eps = draw_signs(&mut rng, n);
                    solver.sup(&eps, c_offset, convention.coefficient, xi)
                })
                .collect()
        }
    };
    Ok(values)
}

/// Estimate the expected supremum of the offset process by Monte Carlo.
pub fn offset_mc(
    class: &McClass<'_>,
    c_offset: f64,
    convention: Convention,
    xi: Option<&[f64]>,
    reps: usize,
    seed: u64,
) -> Result<OffsetEstimate> {
    let values = offset_mc_values(class, c_offset, convention, xi, reps, seed)?;
    let sorted = stats::sorted(&values);
    let quantiles = QUANTILE_LEVELS
        .iter()
        .map(|&q| (q, stats::quantile(&sorted, q)))
        .collect();
    Ok(OffsetEstimate {
        mean: stats::mean(&values),
        stderr: stats::standard_error(&values),
        quantiles,
        reps,
        seed,
        c_offset,
        convention,
    })
}

/// High-probability tail check for a finite class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    /// Exceedance threshold for the supremum.
    pub threshold: f64,
    /// Observed frequency of `sup >= threshold`.
    pub exceedance: f64,
    pub delta: f64,
    /// Three-sigma binomial Monte Carlo slack at level delta.
    pub slack: f64,
    pub pass: bool,
    /// Multiplier scale: `1/(2C)` for unit multipliers, the worst-case
    /// noise-weighted ratio M otherwise.
    pub scale: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Worst-case noise scale `M = sup_{v != 0} sum v_i^2 xi_i^2 / (2C sum v_i^2)`.
pub fn noise_scale_m(dict: &FiniteDictionary, xi: &[f64], c_offset: f64) -> f64 {
    let mut m = 0.0f64;
    for row in dict.rows() {
        let mut num = 0.0;
        let mut den = 0.0;
        for (v, x) in row.iter().zip(xi) {
            num += v * v * x * x;
            den += v * v;
        }
        if den > 0.0 {
            m = m.max(num / (2.0 * c_offset * den));
        }
    }
    m
}

/// Check the exceedance clause for a finite class: the frequency of
/// `sup >= scale * (log N + log(1/delta)) / n` must not exceed
/// `delta` plus binomial slack. The linear coefficient is 1 in this display.
pub fn offset_tail_check(
    dict: &FiniteDictionary,
    c_offset: f64,
    xi: Option<&[f64]>,
    reps: usize,
    delta: f64,
    seed: u64,
) -> Result<TailCheck> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidParameter("delta must be in (0,1)".into()));
    }
    let convention = match xi {
        None => Convention {
            coefficient: LinearCoefficient::One,
            multipliers: Multipliers::Unit,
        },
        Some(_) => Convention {
            coefficient: LinearCoefficient::One,
            multipliers: Multipliers::Noise,
        },
    };
    let n = dict.len_n() as f64;
    let scale = match xi {
        None => 1.0 / (2.0 * c_offset),
        Some(xi) => noise_scale_m(dict, xi, c_offset),
    };
    let threshold = scale * ((dict.size() as f64).ln() + (1.0 / delta).ln()) / n;
    let values = offset_mc_values(&McClass::Finite(dict), c_offset, convention, xi, reps, seed)?;
    let exceedance =
        values.iter().filter(|&&v| v >= threshold).count() as f64 / values.len() as f64;
    let slack = stats::binomial_slack(delta, reps);
    Ok(TailCheck {
        threshold,
        exceedance,
        delta,
        slack,
        pass: exceedance <= delta + slack,
        scale,
        reps,
        seed,
    })
}
