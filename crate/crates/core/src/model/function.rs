//! Functions identified with their values on the fixed design, and the
//! empirical geometry (norms, inner products) they live in.
//!
//! All empirical quantities use the 1/n convention: the empirical norm is
//! `sqrt((1/n) sum v_i^2)` and the empirical inner product `(1/n) sum f_i g_i`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A function restricted to the n design points: a length-n value vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedFunction {
    values: Vec<f64>,
}

impl EvaluatedFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("evaluated function"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("evaluated function"));
        }
        Ok(EvaluatedFunction { values })
    }

    pub fn zero(n: usize) -> Self {
        EvaluatedFunction {
            values: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        empirical_norm(&self.values)
    }

    pub fn inner(&self, other: &EvaluatedFunction) -> f64 {
        empirical_inner(&self.values, &other.values)
    }
}

/// Empirical L2 norm: `sqrt((1/n) sum v_i^2)`.
pub fn empirical_norm(v: &[f64]) -> f64 {
    assert!(!v.is_empty(), "empirical norm of empty vector");
    let ss: f64 = v.iter().map(|x| x * x).sum();
    (ss / v.len() as f64).sqrt()
}

/// Empirical inner product: `(1/n) sum f_i g_i`.
pub fn empirical_inner(f: &[f64], g: &[f64]) -> f64 {
    assert_eq!(f.len(), g.len(), "inner product length mismatch");
    let s: f64 = f.iter().zip(g).map(|(a, b)| a * b).sum();
    s / f.len() as f64
}

/// Empirical L2 distance `d_n(f, g)`.
pub fn empirical_distance(f: &[f64], g: &[f64]) -> f64 {
    assert_eq!(f.len(), g.len(), "distance length mismatch");
    let ss: f64 = f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / f.len() as f64).sqrt()
}
