//! Observed samples: fixed design points with responses, optionally carrying
//! the synthetic truth (values of f* on the design and the noise draws).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Known truth attached to a synthetic sample. The noise `xi_i = y_i - f*(x_i)`
/// is computed once at construction and stored, never recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    f_star: Vec<f64>,
    xi: Vec<f64>,
}

impl Truth {
    pub fn f_star(&self) -> &[f64] {
        &self.f_star
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
}

/// n covariate records (real vectors of dimension d) with n responses.
/// Weights are uniform 1/n throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSample {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    truth: Option<Truth>,
}

impl DesignSample {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Empty("design sample"));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "responses vs design points",
                expected: x.len(),
                got: y.len(),
            });
        }
        let d = x[0].len();
        for row in &x {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "covariate dimension",
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("design points"));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        Ok(DesignSample { x, y, truth: None })
    }

    /// Attach truth values; `xi` is derived as `y - f_star` exactly.
    pub fn with_truth(x: Vec<Vec<f64>>, y: Vec<f64>, f_star: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(x, y)?;
        if f_star.len() != s.n() {
            return Err(Error::DimensionMismatch {
                what: "f* values",
                expected: s.n(),
                got: f_star.len(),
            });
        }
        if f_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("f* values"));
        }
        let xi: Vec<f64> = s.y.iter().zip(&f_star).map(|(yi, fi)| yi - fi).collect();
        s.truth = Some(Truth { f_star, xi });
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Covariate dimension d.
    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn x_rows(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn truth(&self) -> Option<&Truth> {
        self.truth.as_ref()
    }

    pub fn require_truth(&self) -> Result<&Truth> {
        self.truth.as_ref().ok_or(Error::MissingTruth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_is_stored_difference() {
        let s = DesignSample::with_truth(
            vec![vec![0.0], vec![1.0]],
            vec![2.0, -1.0],
            vec![1.5, -1.25],
        )
        .unwrap();
        let t = s.truth().unwrap();
        assert_eq!(t.xi(), &[0.5, 0.25]);
        // Exact identity, bit for bit.
        for i in 0..s.n() {
            assert_eq!(t.xi()[i], s.y()[i] - t.f_star()[i]);
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(DesignSample::new(vec![vec![0.0]], vec![1.0, 2.0]).is_err());
        assert!(DesignSample::new(vec![], vec![]).is_err());
        assert!(DesignSample::new(vec![vec![0.0], vec![1.0, 2.0]], vec![1.0, 2.0]).is_err());
    }
}
